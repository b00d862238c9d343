#include "scenario.hpp"

#include <fmt/format.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "criteria.hpp"
#include "sheafq/expr.hpp"
#include "sheafq/rectify.hpp"
#include "svg.hpp"

namespace sq::cli {

namespace fs = std::filesystem;

bool RunResult::pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

Json load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  if (fs::path(path).extension() == ".json") {
    try {
      return Json::parse(text);
    } catch (const Json::parse_error& e) {
      // nlohmann reports a byte offset; turn it into line and column
      std::size_t off = std::min<std::size_t>(e.byte, text.size());
      int line = 1, col = 1;
      for (std::size_t i = 0; i + 1 < off; ++i) {
        if (text[i] == '\n') {
          ++line;
          col = 1;
        } else {
          ++col;
        }
      }
      throw ParseError(e.what(), line, col);
    }
  }
  return parse_toml(text);
}

namespace {

const char* default_anchor(const std::string& kind) {
  static const std::map<std::string, const char*> anchors{
      {"quantize", "cellular-presentation"},     {"sections", "section-ranks"},
      {"microstalk", "cusp-microstalk"},         {"ss", "singular-support-fidelity"},
      {"convolve", "convolution-unit-laws"},     {"tensor", "convolution-unit-laws"},
      {"dual", "duality"},                       {"rhom", "self-hom-pushforward"},
      {"cup", "product-compatibility"},          {"rectify-check", "rectification"},
      {"sublemma", "rectification-sublemma"},    {"oracle-compare", "three-route-agreement"},
      {"reduce", "reduction-to-closed-subset"}};
  auto it = anchors.find(kind);
  return it == anchors.end() ? nullptr : it->second;
}

std::string num(double v) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  return fmt::format("{}", v);
}

std::string ranks_str(const std::map<int, int>& r) {
  std::string s = "{";
  for (auto [p, v] : r) s += fmt::format("{}{}:{}", s.size() > 1 ? "," : "", p, v);
  return s + "}";
}

int get(const std::map<int, int>& m, int p) {
  auto it = m.find(p);
  return it == m.end() ? 0 : it->second;
}

std::vector<int> degrees(std::initializer_list<const std::map<int, int>*> maps) {
  std::vector<int> out;
  for (const auto* m : maps)
    for (auto [p, v] : *m)
      if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
  std::sort(out.begin(), out.end());
  return out;
}

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw InputError("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

class Runner {
 public:
  Runner(const Json& doc, const RunFlags& flags) : doc_(doc), flags_(flags) {
    for (const auto& key : {"genfun", "region", "task"})
      if (doc.contains(key) && !(doc[key].is_object() || doc[key].is_array()))
        throw InputError(fmt::format("'{}' must be a table", key));
    seed_ = flags.seed ? *flags.seed : static_cast<unsigned>(number_or(doc, "seed", 1));
    if (flags.field) {
      field_ = *flags.field;
    } else {
      const std::string f = string_or(doc, "field", "f2");
      if (f != "f2" && f != "q") throw InputError("field must be \"f2\" or \"q\"");
      field_ = f == "q" ? Field::Q : Field::F2;
    }
  }

  RunResult run() {
    RunResult res;
    res.name = string_or(doc_, "name", "scenario");
    res.certifies = string_or(doc_, "certifies", "");
    const Json tasks = doc_.value("task", Json::array());
    if (!tasks.is_array()) throw InputError("'task' must be an array of tables");
    // resolve every reference before running anything
    for (std::size_t i = 0; i < tasks.size(); ++i) validate(static_cast<int>(i), tasks[i]);
    if (tasks.empty()) return res;
    fs::create_directories(flags_.out_dir);
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      const std::size_t before = checks_.size();
      run_task(static_cast<int>(i), tasks[i]);
      bool failed = false;
      for (std::size_t c = before; c < checks_.size(); ++c) failed |= !checks_[c].pass;
      if (failed && flags_.fail_fast) break;
    }
    res.checks = checks_;
    res.outputs = outputs_;
    Json summary = Json::object();
    summary["scenario"] = res.name;
    summary["certifies"] = res.certifies;
    summary["summary"] = string_or(doc_, "summary", "");
    summary["seed"] = seed_;
    summary["field"] = field_ == Field::Q ? "q" : "f2";
    summary["grid_scale"] = flags_.grid_scale;
    Json checks = Json::array();
    for (const auto& c : res.checks)
      checks.push_back({{"task", c.task}, {"kind", c.kind}, {"anchor", c.anchor}, {"pass", c.pass},
                        {"detail", c.detail}});
    summary["checks"] = checks;
    summary["outputs"] = res.outputs;
    summary["pass"] = res.pass();
    write_atomic(fs::path(flags_.out_dir) / "summary.json", summary.dump(2) + "\n");
    return res;
  }

 private:
  const Json& doc_;
  RunFlags flags_;
  unsigned seed_ = 1;
  Field field_ = Field::F2;
  std::map<std::string, GenFun> genfuns_;
  std::vector<CheckResult> checks_;
  std::vector<std::string> outputs_;
  int task_ = 0;
  std::string kind_;
  const Json* cur_ = nullptr;

  static double number_or(const Json& j, const char* key, double dflt) {
    if (!j.contains(key)) return dflt;
    if (!j[key].is_number()) throw InputError(fmt::format("'{}' must be a number", key));
    return j[key].get<double>();
  }
  static std::string string_or(const Json& j, const char* key, const std::string& dflt) {
    if (!j.contains(key)) return dflt;
    if (!j[key].is_string()) throw InputError(fmt::format("'{}' must be a string", key));
    return j[key].get<std::string>();
  }
  std::string where() const { return fmt::format("task {} ({})", task_, kind_); }
  const Json& need(const Json& j, const char* key) const {
    if (!j.contains(key)) throw InputError(fmt::format("{}: missing '{}'", where(), key));
    return j[key];
  }
  std::string need_string(const Json& j, const char* key) const {
    const Json& v = need(j, key);
    if (!v.is_string()) throw InputError(fmt::format("{}: '{}' must be a string", where(), key));
    return v.get<std::string>();
  }
  static double value_of(const Json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "inf" || s == "+inf") return kInf;
      if (s == "-inf") return -kInf;
    }
    throw InputError("expected a number, \"inf\" or \"-inf\"");
  }

  int scaled(double n) const { return std::max(1, static_cast<int>(std::lround(n * flags_.grid_scale))); }

  std::vector<Grid1D> base_of(const Json& j, const std::string& name) const {
    if (!j.contains("base") || !j["base"].is_array() || j["base"].empty())
      throw InputError(fmt::format("genfun '{}': 'base' must be a non-empty array of axes", name));
    std::vector<Grid1D> out;
    for (const auto& ax : j["base"]) {
      const std::string kind = string_or(ax, "kind", "");
      const int n = scaled(number_or(ax, "n", 16));
      if (kind == "circle") {
        out.push_back(Grid1D::circle(n, number_or(ax, "length", 1.0)));
      } else if (kind == "interval") {
        out.push_back(Grid1D::interval(number_or(ax, "lo", 0.0), number_or(ax, "hi", 1.0), n));
      } else {
        throw InputError(fmt::format("genfun '{}': axis kind must be \"circle\" or \"interval\"", name));
      }
    }
    return out;
  }

  const GenFun& genfun(const std::string& name) {
    auto it = genfuns_.find(name);
    if (it != genfuns_.end()) return it->second;
    if (!doc_.contains("genfun") || !doc_["genfun"].contains(name))
      throw InputError(fmt::format("{}: unknown generating function '{}'", where(), name));
    const Json& j = doc_["genfun"][name];
    auto base = base_of(j, name);
    const std::string model = string_or(j, "model", "");
    if (model == "cusp") {
      const Json fib = j.value("fiber", Json::object());
      return genfuns_.emplace(name, cusp_genfun(base, number_or(fib, "R", 3.0), scaled(number_or(fib, "n", 64))))
          .first->second;
    }
    if (!model.empty()) throw InputError(fmt::format("genfun '{}': unknown model '{}'", name, model));
    Expr e;
    try {
      e = Expr::parse(string_or(j, "expr", ""));
    } catch (const ExprError& err) {
      throw InputError(fmt::format("genfun '{}': expr: {}", name, err.what()));
    }
    if (e.max_base_var() > static_cast<int>(base.size()))
      throw InputError(fmt::format("genfun '{}': expr uses x{} on a {}-dimensional base", name, e.max_base_var(),
                                   base.size()));
    if (!j.contains("fiber")) {
      if (e.max_fiber_var() > 0) throw InputError(fmt::format("genfun '{}': xi needs a fiber table", name));
      auto S = graph_genfun(name, base, [e](const std::vector<double>& x) { return e.eval(x, {}); });
      return genfuns_.emplace(name, std::move(S)).first->second;
    }
    const Json& fib = j["fiber"];
    const int k = static_cast<int>(number_or(fib, "k", 1));
    if (k < 1 || k > 2) throw InputError(fmt::format("genfun '{}': fiber k must be 1 or 2", name));
    if (e.max_fiber_var() > k) throw InputError(fmt::format("genfun '{}': expr uses xi{} with k = {}", name,
                                                             e.max_fiber_var(), k));
    Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(k, k);
    if (j.contains("Q")) {
      const Json& q = j["Q"];
      if (!q.is_array() || static_cast<int>(q.size()) != k)
        throw InputError(fmt::format("genfun '{}': Q must be a {}x{} array", name, k, k));
      for (int r = 0; r < k; ++r) {
        if (!q[r].is_array() || static_cast<int>(q[r].size()) != k)
          throw InputError(fmt::format("genfun '{}': Q must be a {}x{} array", name, k, k));
        for (int c = 0; c < k; ++c) Q(r, c) = value_of(q[r][c]);
      }
    }
    const bool local = j.value("local", false);
    auto S = make_genfun(name, base, number_or(fib, "R", 3.0), scaled(number_or(fib, "n", 24)),
                         [e](const std::vector<double>& x, const std::vector<double>& xi) { return e.eval(x, xi); },
                         Q, !local);
    return genfuns_.emplace(name, std::move(S)).first->second;
  }

  Region region(const Json& t, const char* key) const {
    if (!t.contains(key)) return Region::all();
    const std::string name = need_string(t, key);
    if (name == "all") return Region::all();
    if (!doc_.contains("region") || !doc_["region"].contains(name))
      throw InputError(fmt::format("{}: unknown region '{}'", where(), name));
    const Json& j = doc_["region"][name];
    if (!j.contains("ranges") || !j["ranges"].is_array())
      throw InputError(fmt::format("region '{}': 'ranges' must be an array", name));
    Region r;
    for (const auto& ax : j["ranges"]) {
      if (ax.is_string() && ax.get<std::string>() == "all") {
        r.ranges.push_back(AxisRange::all());
      } else if (ax.is_array() && ax.size() == 2) {
        r.ranges.push_back(AxisRange::between(value_of(ax[0]), value_of(ax[1])));
      } else {
        throw InputError(fmt::format("region '{}': each range is [lo, hi] or \"all\"", name));
      }
    }
    return r;
  }

  // "unit", "open:<region>", "closed:<region>" or a generating function,
  // which is quantized. `hint` supplies the base for the special names.
  TameSheaf sheaf(const std::string& ref, const std::vector<Grid1D>* hint, bool cellular) {
    auto base = [&]() -> const std::vector<Grid1D>& {
      if (!hint) throw InputError(fmt::format("{}: '{}' needs a generating function for its base", where(), ref));
      return *hint;
    };
    if (ref == "unit") return cellular ? unit(base(), field_) : unit_sheaf(base());
    for (const char* prefix : {"open:", "closed:"}) {
      if (ref.rfind(prefix, 0) != 0) continue;
      Json t{{"r", ref.substr(std::string(prefix).size())}};
      Region U = region(t, "r");
      return prefix[0] == 'o' ? open_set_sheaf(base(), U, field_) : closed_set_sheaf(base(), U, field_);
    }
    auto F = quantize(genfun(ref));
    return cellular ? to_cellular(F, field_, 0, seed_) : F;
  }
  bool is_special(const std::string& ref) const {
    return ref == "unit" || ref.rfind("open:", 0) == 0 || ref.rfind("closed:", 0) == 0;
  }
  const std::vector<Grid1D>* base_hint(const std::vector<std::string>& refs) {
    for (const auto& r : refs)
      if (!is_special(r)) return &genfun(r).base;
    if (cur_ && cur_->contains("base")) return &genfun(need_string(*cur_, "base")).base;
    return nullptr;
  }

  std::vector<std::pair<double, double>> windows(const Json& t, const GenFun* S, const Region& U) const {
    std::vector<std::pair<double, double>> out;
    const Json w = t.value("windows", Json("regular"));
    if (w.is_string() && w.get<std::string>() == "regular") {
      if (!S) throw InputError(fmt::format("{}: regular windows need a generating function", where()));
      std::vector<double> lv{-kInf};
      for (double v : regular_levels(*S, U)) lv.push_back(v);
      lv.push_back(kInf);
      for (std::size_t i = 0; i < lv.size(); ++i)
        for (std::size_t j = i + 1; j < lv.size(); ++j)
          if (std::isfinite(lv[i]) || std::isfinite(lv[j])) out.push_back({lv[i], lv[j]});
      return out;
    }
    if (!w.is_array()) throw InputError(fmt::format("{}: windows must be \"regular\" or a list of [a, b]", where()));
    for (const auto& p : w) {
      if (!p.is_array() || p.size() != 2) throw InputError(fmt::format("{}: each window is [a, b]", where()));
      out.push_back({value_of(p[0]), value_of(p[1])});
    }
    return out;
  }

  std::string stem(const std::string& label) const {
    std::string s = fmt::format("{:02}-{}", task_, kind_);
    if (!label.empty()) s += "-" + label;
    for (auto& c : s)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
    return s;
  }
  void emit(const std::string& name, const std::string& content) {
    write_atomic(fs::path(flags_.out_dir) / name, content);
    outputs_.push_back(name);
  }
  bool wants(const char* format) const {
    if (!cur_->contains("outputs")) return true;
    for (const auto& o : (*cur_)["outputs"])
      if (o.is_string() && o.get<std::string>() == format) return true;
    return false;
  }
  void check(bool ok, std::string detail) {
    const std::string anchor = cur_->value("anchor", std::string(default_anchor(kind_)));
    checks_.push_back({task_, kind_, anchor, ok, std::move(detail)});
  }

  void validate(int i, const Json& t) {
    task_ = i;
    cur_ = &t;
    if (!t.is_object()) throw InputError(fmt::format("task {}: must be a table", i));
    kind_ = need_string(t, "kind");
    if (!default_anchor(kind_)) throw InputError(fmt::format("task {}: unknown kind '{}'", i, kind_));
    for (const char* key : {"sheaf", "left", "right", "compare", "genfun", "f", "g", "h", "base"})
      if (t.contains(key)) {
        const std::string ref = need_string(t, key);
        if (ref == "negate" && std::string(key) == "compare") continue;
        if (ref.rfind("open:", 0) == 0 || ref.rfind("closed:", 0) == 0) {
          region(Json{{"r", ref.substr(ref.find(':') + 1)}}, "r");
        } else if (ref != "unit") {
          genfun(ref);
        }
      }
    if (t.contains("pair"))
      for (const auto& r : t["pair"]) genfun(r.get<std::string>());
    region(t, "region");
  }

  void run_task(int i, const Json& t) {
    task_ = i;
    cur_ = &t;
    kind_ = t["kind"].get<std::string>();
    if (kind_ == "quantize") return do_quantize(t);
    if (kind_ == "sections") return do_sections(t);
    if (kind_ == "microstalk") return do_microstalk(t);
    if (kind_ == "ss") return do_ss(t);
    if (kind_ == "tensor" || kind_ == "convolve") return do_tensor(t);
    if (kind_ == "dual") return do_dual(t);
    if (kind_ == "rhom") return do_rhom(t);
    if (kind_ == "cup") return do_cup(t);
    if (kind_ == "rectify-check") return do_rectify(t);
    if (kind_ == "sublemma") return do_sublemma(t);
    if (kind_ == "oracle-compare") return do_oracle(t);
    if (kind_ == "reduce") return do_reduce(t);
  }

  Series strands(const GenFun& S) const {
    Series s{"front", "#444", {}, 1.2};
    for (const auto& p : all_strands(S))
      if (!p.x.empty()) s.points.push_back({p.x[0], p.value});
    return s;
  }

  void do_quantize(const Json& t) {
    const std::string name = need_string(t, "sheaf");
    const GenFun& S = genfun(name);
    auto F = quantize(S);
    if (wants("csv")) {
      emit(stem(name) + "-cerf.csv", cerf_diagram(S, Region::all()).csv());
      emit(stem(name) + "-strata.csv", stratification(F).csv());
    }
    if (wants("svg") && S.base.size() == 1) emit(stem(name) + ".svg", svg_scatter(name + " front", {strands(S)}));
    const int spot = static_cast<int>(number_or(t, "cross_check", 0));
    if (spot > 0) {
      try {
        to_cellular(F, field_, spot, seed_);
        check(true, fmt::format("{}: cellular presentation agrees on {} boxes", name, spot));
      } catch (const SheafError& e) {
        check(false, fmt::format("{}: {}", name, e.what()));
      }
    }
  }

  void do_sections(const Json& t) {
    const std::string name = need_string(t, "sheaf");
    const bool cellular = t.value("route", std::string("gf")) == "cellular";
    auto hint = base_hint({name});
    auto F = sheaf(name, hint, cellular);
    const Region U = region(t, "region");
    const GenFun* S = is_special(name) ? nullptr : &genfun(name);
    std::optional<TameSheaf> G;
    if (t.contains("compare")) G = sheaf(need_string(t, "compare"), hint, cellular);
    std::string csv = G ? "lo,hi,degree,rank,compare\n" : "lo,hi,degree,rank\n";
    int bad = 0, n = 0;
    std::string first;
    for (auto [a, b] : windows(t, S, U)) {
      auto r = drop_zero(sections(F, U, a, b, field_));
      std::map<int, int> g;
      if (G) g = drop_zero(sections(*G, U, a, b, field_));
      for (int p : degrees({&r, &g})) {
        csv += fmt::format("{},{},{},{}", num(a), num(b), p, get(r, p));
        csv += G ? fmt::format(",{}\n", get(g, p)) : "\n";
      }
      ++n;
      if (G && r != g && bad++ == 0) first = fmt::format("[{}, {}): {} vs {}", num(a), num(b), ranks_str(r), ranks_str(g));
    }
    if (wants("csv")) emit(stem(name) + ".csv", csv);
    if (G) check(bad == 0, bad ? fmt::format("{} of {} windows differ, first {}", bad, n, first)
                               : fmt::format("{} windows agree", n));
  }

  void do_microstalk(const Json& t) {
    const std::string name = need_string(t, "sheaf");
    const GenFun& S = genfun(name);
    auto F = quantize(S);
    std::vector<std::pair<std::vector<double>, double>> pts;
    if (t.contains("points"))
      for (const auto& p : t["points"]) {
        if (!p.is_array() || p.size() != S.base.size() + 1)
          throw InputError(fmt::format("{}: each point is [x..., t]", where()));
        std::vector<double> x;
        for (std::size_t a = 0; a < S.base.size(); ++a) x.push_back(value_of(p[a]));
        pts.push_back({x, value_of(p[S.base.size()])});
      }
    if (t.contains("grid")) {
      const Json& g = t["grid"];
      if (S.base.size() != 1) throw InputError(fmt::format("{}: grid sampling needs a one-dimensional base", where()));
      for (const auto& x : need(g, "x"))
        for (const auto& tt : need(g, "t")) pts.push_back({{value_of(x)}, value_of(tt)});
    }
    std::optional<Expr> envelope;
    double collar = 2 * value_tolerance(S);
    if (t.contains("envelope")) {
      try {
        envelope = Expr::parse(need_string(t, "envelope"));
      } catch (const ExprError& e) {
        throw InputError(fmt::format("{}: envelope: {}", where(), e.what()));
      }
      collar = number_or(t, "collar", collar);
    }
    std::string csv = "x,t,degree,rank,expected\n";
    Series in{"rank 1", "#d62728", {}, 2.5}, out{"rank 0", "#1f77b4", {}, 2.5};
    int bad = 0, checked = 0;
    std::string first;
    for (const auto& [x, tt] : pts) {
      auto r = drop_zero(microstalk(F, x, tt, field_));
      int total = 0;
      for (auto [p, v] : r) total += v;
      std::string expected;
      if (envelope) {
        const double e = envelope->eval(x, {});
        if (std::fabs(tt) < e - collar || std::fabs(tt) > e + collar) {
          const int want = std::fabs(tt) < e - collar ? 1 : 0;
          expected = std::to_string(want);
          ++checked;
          if (total != want && bad++ == 0) first = fmt::format("({}, {}): {}", num(x[0]), num(tt), total);
        }
      }
      std::string xs;
      for (double v : x) xs += (xs.empty() ? "" : " ") + num(v);
      if (r.empty()) csv += fmt::format("{},{},,0,{}\n", xs, num(tt), expected);
      for (auto [p, v] : r) csv += fmt::format("{},{},{},{},{}\n", xs, num(tt), p, v, expected);
      (total ? in : out).points.push_back({x[0], tt});
    }
    if (wants("csv")) emit(stem(name) + ".csv", csv);
    if (wants("svg") && S.base.size() == 1)
      emit(stem(name) + ".svg", svg_scatter(name + " microstalk", {strands(S), in, out}));
    if (envelope)
      check(bad == 0, bad ? fmt::format("{} of {} samples off, first {}", bad, checked, first)
                          : fmt::format("{} samples outside the collar {:.4g} agree", checked, collar));
  }

  void do_ss(const Json& t) {
    const std::string name = need_string(t, "sheaf");
    const GenFun& S = genfun(name);
    auto ss = singular_support(quantize(S), number_or(t, "tau_res", 0.05));
    auto L = conify(brane_of(S));
    const double h = hausdorff_cells(ss, L, ss.hx, ss.ht, ss.hp);
    if (wants("csv")) emit(stem(name) + ".csv", ss.csv());
    if (wants("svg") && S.base.size() == 1) emit(stem(name) + ".svg", svg_cones(name + " codirections", ss, L));
    const double limit = number_or(t, "max_cells", 2.0);
    check(h <= limit, fmt::format("{}: Hausdorff distance {:.4g} cells, limit {}", name, h, num(limit)));
  }

  void compare_routes(const std::string& label, const std::vector<std::pair<std::string, TameSheaf>>& results,
                      const std::function<TameSheaf(bool)>& target, double pad) {
    const int count = static_cast<int>(number_or(*cur_, "boxes", 20));
    std::string csv = "route,box,lo,hi,degree,result,expected\n";
    for (const auto& [route, R] : results) {
      auto T = target(route == "cellular");
      auto boxes = regular_boxes({&T, &R}, field_, count, seed_, pad);
      int bad = 0;
      std::string why;
      for (std::size_t b = 0; b < boxes.size(); ++b) {
        auto r = drop_zero(sections(R, boxes[b].U, boxes[b].a, boxes[b].b, field_));
        auto e = drop_zero(sections(T, boxes[b].U, boxes[b].a, boxes[b].b, field_));
        for (int p : degrees({&r, &e}))
          csv += fmt::format("{},{},{},{},{},{},{}\n", route, b, num(boxes[b].a), num(boxes[b].b), p, get(r, p),
                             get(e, p));
        if (r != e && bad++ == 0)
          why = fmt::format("box {} [{}, {}): {} vs {}", b, num(boxes[b].a), num(boxes[b].b), ranks_str(r),
                            ranks_str(e));
      }
      const bool enough = static_cast<int>(boxes.size()) == count;
      check(bad == 0 && enough,
            fmt::format("{} ({}): {} of {} boxes differ{}{}", label, route, bad, boxes.size(),
                        why.empty() ? "" : ", first " + why, enough ? "" : ", too few regular boxes"));
    }
    if (wants("csv")) emit(stem(label) + ".csv", csv);
  }

  std::vector<std::string> routes(const Json& t) const {
    const std::string r = t.value("route", std::string("both"));
    if (r == "both") return {"gf", "cellular"};
    if (r == "gf" || r == "cellular") return {r};
    throw InputError(fmt::format("{}: route must be gf, cellular or both", where()));
  }

  double pad_of(const std::string& ref, const std::vector<Grid1D>* hint) {
    return is_special(ref) ? 1e-3 : action_pad(sheaf(ref, hint, false));
  }

  void do_tensor(const Json& t) {
    const std::string l = need_string(t, "left"), r = need_string(t, "right");
    const bool dual_left = t.value("dual_left", false);
    auto hint = base_hint({l, r});
    std::vector<std::pair<std::string, TameSheaf>> results;
    for (const auto& route : routes(t)) {
      const bool cell = route == "cellular";
      TameSheaf L = sheaf(l, hint, cell && !dual_left);
      if (dual_left) L = cell ? dualize_cellular(sheaf(l, hint, false), field_) : dualize(L, field_);
      TameSheaf R = sheaf(r, hint, cell);
      results.push_back({route, kind_ == "convolve" ? convolve(L, R, field_) : tensor(L, R, field_)});
    }
    const std::string label = (dual_left ? "dual-" : "") + l + "-" + r;
    if (!t.contains("compare")) {
      const auto& R = results.front().second;
      if (R.is_gf() && wants("csv")) {
        std::string csv = "degree,birth,death\n";
        for (const auto& b : pushforward_barcode(R, field_).bars)
          csv += fmt::format("{},{},{}\n", b.degree, num(b.birth), num(b.death));
        emit(stem(label) + "-barcode.csv", csv);
      }
      return;
    }
    const std::string c = need_string(t, "compare");
    const double pad = (dual_left ? 2 : 1) * (pad_of(l, hint) + pad_of(r, hint));
    compare_routes(label, results, [&](bool cell) { return sheaf(c, hint, cell); }, pad);
  }

  void do_dual(const Json& t) {
    const std::string name = need_string(t, "sheaf");
    auto hint = base_hint({name});
    const std::string c = t.value("compare", std::string("negate"));
    if (t.value("twice", false)) {
      auto F = sheaf(name, hint, true);
      auto DD = dualize(dualize(F, field_), field_);
      compare_routes("double-" + name, {{"cellular", DD}}, [&](bool) { return F; }, 2 * pad_of(name, hint));
      return;
    }
    std::vector<std::pair<std::string, TameSheaf>> results;
    for (const auto& route : routes(t)) {
      auto F = sheaf(name, hint, false);
      try {
        results.push_back({route, route == "cellular" ? dualize_cellular(F, field_) : dualize(F, field_)});
      } catch (const SheafError& e) {
        check(false, fmt::format("{} ({}): {}", name, route, e.what()));
      }
    }
    if (results.empty()) return;
    auto target = [&](bool cell) {
      if (c == "negate") return quantize(negate(genfun(name)));
      return sheaf(c, hint, cell);
    };
    const double pad = is_special(name) ? 1e-3 : 2 * pad_of(name, hint);
    compare_routes("dual-" + name, results, target, pad);
  }

  void do_rhom(const Json& t) {
    const std::string l = need_string(t, "left"), r = need_string(t, "right");
    auto hint = base_hint({l, r});
    auto H = rhom_tensor(sheaf(l, hint, false), sheaf(r, hint, false), field_);
    auto bc = pushforward_barcode(H, field_);
    std::string csv = "degree,birth,death\n";
    for (const auto& b : bc.bars) csv += fmt::format("{},{},{}\n", b.degree, num(b.birth), num(b.death));
    const std::string label = l + "-" + r;
    if (wants("csv")) emit(stem(label) + ".csv", csv);
    if (wants("svg")) emit(stem(label) + ".svg", svg_barcode("pushforward of Hom(" + l + ", " + r + ")", bc));
    if (!t.contains("expect_essential")) return;
    std::map<int, int> expect;
    for (const auto& [k, v] : t["expect_essential"].items()) expect[std::stoi(k)] = v.get<int>();
    const double tol = H.gf ? 2 * value_tolerance(*H.gf) : 1e-9;
    std::map<int, int> essential;
    int stray = 0;
    for (const auto& b : bc.bars) {
      if (std::isinf(b.death)) {
        essential[b.degree]++;
        stray += std::fabs(b.birth) > tol;
      } else {
        stray += b.death - b.birth > tol;
      }
    }
    check(essential == expect && stray == 0,
          fmt::format("{}: bars [0, inf) {}, expected {}, {} bars off zero", label, ranks_str(essential),
                      ranks_str(expect), stray));
  }

  GraphBrane brane(const std::string& name) {
    const GenFun& S = genfun(name);
    if (S.k() != 0) throw InputError(fmt::format("{}: '{}' must be a graph (no fiber)", where(), name));
    return GraphBrane{name, S.base, S.values, 0};
  }

  void do_cup(const Json& t) {
    std::vector<GraphBrane> br{brane(need_string(t, "f")), brane(need_string(t, "g")), brane(need_string(t, "h"))};
    for (const auto& b : br)
      if (b.base.size() != 1 || b.base[0].topology != Topology::Circle)
        throw InputError(fmt::format("{}: products are tabulated on a circle base", where()));
    const double lam = value_of(need(t, "lambda")), mu = value_of(need(t, "mu"));
    std::vector<TameSheaf> q;
    for (const auto& b : br) q.push_back(quantize(as_genfun(b)));
    auto H12 = rhom_tensor(q[0], q[1], field_), H23 = rhom_tensor(q[1], q[2], field_);
    auto coords = [](const std::vector<Rational>& v) {
      std::string s;
      for (const auto& x : v) s += (s.empty() ? "" : " ") + x.str();
      return s;
    };
    std::string csv = "d1,d2,i,j,pant,cup,match\n";
    int bad = 0, n = 0;
    std::string first;
    for (int d1 : {0, 1})
      for (int d2 : {0, 1}) {
        auto m1 = morse_class_basis(br[0], br[1], lam, d1, field_);
        auto m2 = morse_class_basis(br[1], br[2], mu, d2, field_);
        auto s1 = circle_basis(H12, lam, d1, field_);
        auto s2 = circle_basis(H23, mu, d2, field_);
        if (m1.size() != s1.size() || m2.size() != s2.size()) {
          if (bad++ == 0) first = fmt::format("basis sizes differ in degrees {}, {}", d1, d2);
          continue;
        }
        for (std::size_t i = 0; i < m1.size(); ++i)
          for (std::size_t j = 0; j < m2.size(); ++j) {
            auto a = coords(morse_circle_coordinates(pant_product(m1[i], m2[j])));
            std::string b;
            try {
              b = coords(circle_coordinates(cup_product(s1[i], s2[j])));
            } catch (const SheafError& e) {
              b = "mixed edge";
              if (bad == 0) first = e.what();
            }
            ++n;
            const bool ok = a == b;
            if (!ok && bad++ == 0 && first.empty()) first = fmt::format("entry ({}, {}) in degrees {}, {}", i, j, d1, d2);
            csv += fmt::format("{},{},{},{},{},{},{}\n", d1, d2, i, j, a, b, ok ? 1 : 0);
          }
      }
    if (wants("csv")) emit(stem(br[0].name + "-" + br[1].name + "-" + br[2].name) + ".csv", csv);
    check(bad == 0, bad ? fmt::format("{} mismatches, first {}", bad, first) : fmt::format("{} entries agree", n));
  }

  void do_rectify(const Json& t) {
    const int count = static_cast<int>(number_or(t, "diagrams", 100));
    std::string csv = "seed,field,functions,higher,coherent,d2_zero,quasi_iso\n";
    int bad = 0;
    for (int i = 0; i < count; ++i) {
      const unsigned seed = seed_ + i;
      const Field f = seed % 2 ? Field::Q : Field::F2;
      auto d = perturb_coherent(acceptance::random_strict(seed, f), seed + 1000);
      int higher = 0;
      for (const auto& [c, m] : d.phi) higher += c.size() > 2 && !m.is_zero();
      const bool coherent = check_coherence(d).pass;
      bool d2 = true, qi = true;
      for (int s = 0; s < d.poset.size(); ++s) {
        auto R = rectify_at(d, s);
        d2 = d2 && (R.complex.d() * R.complex.d()).is_zero();
        qi = qi && is_quasi_iso(d.V[s].complex(), R.complex.complex(), R.inclusion);
      }
      bad += !(coherent && d2 && qi);
      csv += fmt::format("{},{},{},{},{},{},{}\n", seed, f == Field::Q ? "q" : "f2", d.poset.size(), higher,
                         coherent ? 1 : 0, d2 ? 1 : 0, qi ? 1 : 0);
    }
    if (wants("csv")) emit(stem("") + ".csv", csv);
    check(bad == 0, fmt::format("{} of {} diagrams fail", bad, count));
  }

  void do_sublemma(const Json& t) {
    std::vector<int> ms;
    const Json m = t.value("m", Json::array({2, 3, 4, 5}));
    for (const auto& v : m) ms.push_back(v.get<int>());
    std::string csv;
    std::vector<int> failed;
    for (int k : ms) {
      auto r = brute_force_sublemma(k);
      csv += r.csv();
      if (!r.pass) failed.push_back(k);
    }
    if (wants("csv")) emit(stem("") + ".csv", csv);
    check(failed.empty(), failed.empty() ? fmt::format("m = {} pass", fmt::join(ms, ", "))
                                         : fmt::format("fails for m = {}", fmt::join(failed, ", ")));
  }

  void do_oracle(const Json& t) {
    std::optional<GenFun> S;
    std::function<std::map<int, int>(double, double)> floer;
    std::string label;
    if (t.contains("pair")) {
      const Json& p = t["pair"];
      if (!p.is_array() || p.size() != 2) throw InputError(fmt::format("{}: pair needs two graphs", where()));
      auto L0 = brane(p[0].get<std::string>()), L1 = brane(p[1].get<std::string>());
      if (!same_base(L0.base, L1.base)) throw InputError(fmt::format("{}: the pair needs one base", where()));
      std::vector<double> diff(L0.f.size());
      for (std::size_t v = 0; v < diff.size(); ++v) diff[v] = L1.f[v] - L0.f[v];
      S = graph_from_values(L0.name + "-" + L1.name, L0.base, diff);
      floer = [=, f = field_](double a, double b) { return floer_ranks(L0, L1, a, b, f); };
      label = L0.name + "-" + L1.name;
    } else {
      label = need_string(t, "genfun");
      S = genfun(label);
      floer = [S, f = field_](double a, double b) { return gf_floer_ranks(*S, a, b, f); };
    }
    auto cell = to_cellular(quantize(*S), field_, 0, seed_);
    std::string csv = "lo,hi,degree,floer,gf,sheaf\n";
    int bad = 0, n = 0;
    std::string first;
    for (auto [a, b] : windows(t, &*S, Region::all())) {
      auto fl = drop_zero(floer(a, b));
      auto gf = drop_zero(gf_cohomology(*S, Region::all(), a, b, field_));
      auto sh = drop_zero(sections(cell, Region::all(), a, b, field_));
      for (int p : degrees({&fl, &gf, &sh}))
        csv += fmt::format("{},{},{},{},{},{}\n", num(a), num(b), p, get(fl, p), get(gf, p), get(sh, p));
      ++n;
      if (!(fl == gf && gf == sh) && bad++ == 0)
        first = fmt::format("[{}, {}): floer {} gf {} sheaf {}", num(a), num(b), ranks_str(fl), ranks_str(gf),
                            ranks_str(sh));
    }
    if (wants("csv")) emit(stem(label) + ".csv", csv);
    check(bad == 0, bad ? fmt::format("{} of {} windows disagree, first {} (seed {})", bad, n, first, seed_)
                        : fmt::format("{} windows, three routes agree", n));
  }

  void do_reduce(const Json& t) {
    const std::string name = need_string(t, "genfun");
    const GenFun& S = genfun(name);
    const Region Z = region(t, "region");
    std::string csv = "lo,hi,degree,sheaf,restriction,floer,stabilized\n";
    std::string certs;
    int bad = 0, n = 0;
    std::string first;
    for (auto [a, b] : windows(t, &S, Z)) {
      auto r = reduce_to_Z(S, Z, a, b, field_);
      for (int p : degrees({&r.sheaf_ranks, &r.restriction_rank, &r.floer.ranks}))
        csv += fmt::format("{},{},{},{},{},{},{}\n", num(a), num(b), p, get(r.sheaf_ranks, p),
                           get(r.restriction_rank, p), get(r.floer.ranks, p), r.floer.stabilized ? 1 : 0);
      certs += fmt::format("[{}, {})\n{}\n", num(a), num(b), r.floer.certificate());
      ++n;
      if (!r.agree() && bad++ == 0)
        first = fmt::format("[{}, {}): sheaf {} floer {} ({})", num(a), num(b), ranks_str(r.sheaf_ranks),
                            ranks_str(r.floer.ranks), r.floer.stabilized ? "stable" : "not stabilized");
    }
    const std::string label = name + "-" + t.value("region", std::string("all"));
    if (wants("csv")) {
      emit(stem(label) + ".csv", csv);
      emit(stem(label) + "-certificates.txt", certs);
    }
    check(bad == 0, bad ? fmt::format("{} of {} windows disagree, first {}", bad, n, first)
                        : fmt::format("{} windows agree with stabilization certificates", n));
  }
};

}  // namespace

RunResult run_scenario(const Json& doc, const RunFlags& flags) {
  if (!doc.is_object()) throw InputError("a scenario is a table at the top level");
  return Runner(doc, flags).run();
}

}  // namespace sq::cli
