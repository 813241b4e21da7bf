#include "cnls/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "cnls/error.hpp"

namespace cnls {

namespace {

/// A YAML node with its dotted field path, for diagnostics.
class Field {
 public:
  Field(YAML::Node node, std::string path, const std::string* origin)
      : node_(std::move(node)), path_(std::move(path)), origin_(origin) {}

  [[noreturn]] void error(const std::string& msg) const {
    const auto mark = node_.Mark();
    if (mark.is_null()) fail(ErrorKind::configuration, fmt::format("{}: {}: {}", *origin_, path_, msg));
    fail(ErrorKind::configuration,
         fmt::format("{}:{}:{}: {}: {}", *origin_, mark.line + 1, mark.column + 1, path_, msg));
  }

  bool has(const std::string& key) const { return node_.IsMap() && node_[key]; }

  Field operator[](const std::string& key) const {
    if (!node_.IsMap()) error("expected a mapping");
    const YAML::Node child = node_[key];
    if (!child) error(fmt::format("missing required key '{}'", key));
    return Field(child, path_.empty() ? key : path_ + "." + key, origin_);
  }

  std::optional<Field> optional(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return (*this)[key];
  }

  void allow_only(std::initializer_list<const char*> keys) const {
    if (!node_.IsMap()) error("expected a mapping");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) {
        Field(kv.first, path_.empty() ? key : path_ + "." + key, origin_).error("unknown key");
      }
    }
  }

  std::vector<Field> items() const {
    if (!node_.IsSequence()) error("expected a list");
    std::vector<Field> out;
    for (std::size_t i = 0; i < node_.size(); ++i) out.emplace_back(node_[i], fmt::format("{}[{}]", path_, i), origin_);
    return out;
  }

  double number() const {
    if (!node_.IsScalar()) error("expected a number");
    try {
      return node_.as<double>();
    } catch (const YAML::Exception&) {
      error(fmt::format("expected a number, got '{}'", node_.Scalar()));
    }
  }

  std::uint64_t count() const {
    const double x = number();
    if (x < 0.0 || x != std::floor(x) || x > 9.0e15) error("expected a nonnegative integer");
    return static_cast<std::uint64_t>(x);
  }

  bool flag() const {
    if (!node_.IsScalar()) error("expected true or false");
    try {
      return node_.as<bool>();
    } catch (const YAML::Exception&) {
      error(fmt::format("expected true or false, got '{}'", node_.Scalar()));
    }
  }

  std::string text() const {
    if (!node_.IsScalar()) error("expected a string");
    return node_.Scalar();
  }

  Vec3 point() const {
    const auto xs = items();
    if (xs.size() != 3) error("expected a list of three numbers");
    return {xs[0].number(), xs[1].number(), xs[2].number()};
  }

  std::vector<double> numbers() const {
    std::vector<double> out;
    for (const auto& f : items()) out.push_back(f.number());
    return out;
  }

 private:
  YAML::Node node_;
  std::string path_;
  const std::string* origin_;
};

ComponentPotential parse_potential(const Field& f) {
  f.allow_only({"family", "top", "wells", "width", "tail_radius", "offset", "zero_point"});
  ComponentPotential p;
  const Field fam = f["family"];
  try {
    p.family = potential_family_from_string(fam.text());
  } catch (const Error& e) {
    fam.error(e.what());
  }
  if (auto x = f.optional("top")) p.top = x->number();
  if (auto x = f.optional("width")) p.width = x->number();
  if (auto x = f.optional("tail_radius")) p.tail_radius = x->number();
  if (auto x = f.optional("offset")) p.offset = x->number();
  if (auto x = f.optional("zero_point")) p.zero_point = x->point();
  if (auto x = f.optional("wells")) {
    for (const auto& w : x->items()) {
      w.allow_only({"center", "depth"});
      p.wells.push_back({w["center"].point(), w["depth"].number()});
    }
  }
  try {
    p.validate();
  } catch (const Error& e) {
    f.error(e.what());
  }
  return p;
}

Shape parse_shape(const Field& f) {
  f.allow_only({"shape", "center", "radius", "lo", "hi"});
  Shape s;
  const std::string kind = f.has("shape") ? f["shape"].text() : "ball";
  if (kind == "ball") {
    s.kind = Shape::Kind::ball;
    if (auto c = f.optional("center")) s.center = c->point();
    s.radius = f["radius"].number();
    if (!(s.radius > 0.0)) f["radius"].error("radius must be positive");
  } else if (kind == "box") {
    s.kind = Shape::Kind::box;
    s.lo = f["lo"].point();
    s.hi = f["hi"].point();
    if (!(s.lo.x < s.hi.x && s.lo.y < s.hi.y && s.lo.z < s.hi.z)) f.error("box needs lo < hi in every axis");
  } else {
    f["shape"].error("expected 'ball' or 'box'");
  }
  return s;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    fail(ErrorKind::configuration,
         fmt::format("{}:{}:{}: malformed YAML: {}", origin, e.mark.line + 1, e.mark.column + 1, e.msg));
  }
  const Field top(root, "", &origin);
  top.allow_only({"name", "couplings", "potentials", "domain", "grids", "sampling", "eps_ladder", "tolerances",
                  "verify", "ground_state", "output", "seed", "workers"});

  ExperimentConfig cfg;
  cfg.source = text;
  if (auto x = top.optional("name")) cfg.name = x->text();

  const Field cp = top["couplings"];
  cp.allow_only({"mu1", "mu2", "beta"});
  if (auto x = cp.optional("mu1")) cfg.params.mu1 = x->number();
  if (auto x = cp.optional("mu2")) cfg.params.mu2 = x->number();
  cfg.params.beta = cp["beta"].number();
  try {
    cfg.params.validate();
  } catch (const Error& e) {
    cp.error(e.what());
  }

  const Field pots = top["potentials"];
  pots.allow_only({"a", "b"});
  cfg.pots.a = parse_potential(pots["a"]);
  cfg.pots.b = pots.has("b") ? parse_potential(pots["b"]) : cfg.pots.a;

  const Field dom = top["domain"];
  dom.allow_only({"lambda", "O", "delta"});
  cfg.domain.lambda = parse_shape(dom["lambda"]);
  for (const auto& b : dom["O"].items()) {
    b.allow_only({"center", "radius"});
    Ball ball;
    if (auto c = b.optional("center")) ball.center = c->point();
    ball.radius = b["radius"].number();
    if (!(ball.radius > 0.0)) b["radius"].error("radius must be positive");
    cfg.domain.O.push_back(ball);
  }
  if (cfg.domain.O.empty()) dom["O"].error("O needs at least one ball");
  if (auto x = dom.optional("delta")) cfg.domain.delta = x->number();
  try {
    cfg.domain.finalize();
  } catch (const Error& e) {
    dom.error(e.what());
  }

  if (auto g = top.optional("grids")) {
    g->allow_only({"limit", "eps", "R2"});
    if (auto l = g->optional("limit")) {
      l->allow_only({"n", "extent"});
      if (auto x = l->optional("n")) cfg.limit.n = x->count();
      if (auto x = l->optional("extent")) cfg.limit.extent = x->number();
      if (cfg.limit.n < RadialGrid::min_points) l->error("limit grid needs at least 64 nodes");
      if (!(cfg.limit.extent > 0.0)) l->error("extent must be positive");
    }
    if (auto e = g->optional("eps")) {
      e->allow_only({"h", "max_nodes", "cartesian_n", "cartesian_half_width"});
      if (auto x = e->optional("h")) cfg.eps_grid.h = x->number();
      if (auto x = e->optional("max_nodes")) cfg.eps_grid.max_nodes = x->count();
      if (auto x = e->optional("cartesian_n")) cfg.eps_grid.cartesian_n = x->count();
      if (auto x = e->optional("cartesian_half_width")) cfg.eps_grid.cartesian_half_width = x->number();
      if (!(cfg.eps_grid.h > 0.0 && cfg.eps_grid.h <= 0.05)) e->error("h must lie in (0, 0.05]");
    }
    if (auto x = g->optional("R2")) cfg.R2 = x->number();
  }

  if (auto s = top.optional("sampling")) {
    s->allow_only({"admissibility_spacing", "landscape_spacing"});
    if (auto x = s->optional("admissibility_spacing")) cfg.admissibility_spacing = x->number();
    if (auto x = s->optional("landscape_spacing")) cfg.landscape_spacing = x->number();
  }

  if (auto l = top.optional("eps_ladder")) {
    cfg.eps_ladder = l->numbers();
    const double e1 = eps1(cfg.params, cfg.domain.rho0);
    const auto items = l->items();
    for (std::size_t k = 0; k < cfg.eps_ladder.size(); ++k) {
      if (!(cfg.eps_ladder[k] > 0.0 && cfg.eps_ladder[k] < e1)) {
        items[k].error(fmt::format("eps must lie in (0, eps1 = {:.6g})", e1));
      }
      if (k > 0 && !(cfg.eps_ladder[k] < cfg.eps_ladder[k - 1])) items[k].error("eps ladder must decrease strictly");
    }
  }

  if (auto t = top.optional("tolerances")) {
    t->allow_only({"limit", "eps", "max_iter", "truncation", "hardy_check_every"});
    if (auto x = t->optional("limit")) cfg.limit.solve.tol = x->number();
    if (auto x = t->optional("eps")) cfg.eps_solve.tol = x->number();
    if (auto x = t->optional("max_iter")) {
      cfg.limit.solve.max_iter = static_cast<int>(x->count());
      cfg.eps_solve.max_iter = cfg.limit.solve.max_iter;
    }
    if (auto x = t->optional("truncation")) cfg.truncation_tol = x->number();
    if (auto x = t->optional("hardy_check_every")) cfg.eps_solve.hardy_check_every = static_cast<int>(x->count());
  }

  if (auto v = top.optional("verify")) {
    v->allow_only({"alphas"});
    if (auto x = v->optional("alphas")) {
      cfg.alphas = x->numbers();
      for (double a : cfg.alphas) {
        if (!(a > 0.0)) x->error("every alpha must be positive");
      }
    }
  }

  if (auto gs = top.optional("ground_state")) {
    gs->allow_only({"aP", "bP", "scalar"});
    if (auto x = gs->optional("aP")) cfg.gs_aP = x->number();
    if (auto x = gs->optional("bP")) cfg.gs_bP = x->number();
    if (auto x = gs->optional("scalar")) cfg.gs_scalar = x->flag();
  }

  if (auto x = top.optional("output")) cfg.output = x->text();
  if (auto x = top.optional("seed")) cfg.seed = x->count();
  if (auto x = top.optional("workers")) {
    cfg.workers = x->count();
    if (cfg.workers == 0) x->error("workers must be at least 1");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, fmt::format("cannot read config {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string standard_config_text() {
  return R"(name: standard
couplings: {mu1: 1.0, mu2: 1.0, beta: 2.0}
potentials:
  a:
    family: radial_well
    top: 2.0
    width: 2.0
    tail_radius: 9.0
    wells: [{center: [0, 0, 0], depth: 1.0}]
domain:
  lambda: {shape: ball, center: [0, 0, 0], radius: 6.0}
  O: [{center: [0, 0, 0], radius: 3.5}]
eps_ladder: [0.4, 0.3, 0.2, 0.15, 0.1]
ground_state: {aP: 1.0, bP: 1.0}
seed: 1
)";
}

}  // namespace cnls
