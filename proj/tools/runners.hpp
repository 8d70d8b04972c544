#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <erglab/erglab.hpp>

#include "config.hpp"

namespace erglab::cli {

namespace fs = std::filesystem;

using AnySystem = std::variant<TorusMap, FiniteSystem>;

struct RunContext {
  json cfg;
  json params;
  fs::path out;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  std::string stage;  // operation currently running, for error context
  json summary = json::object();
  std::vector<std::string> files;
  int exit_code = 0;

  std::ofstream open(const std::string& name) {
    files.push_back(name);
    std::ofstream f(out / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + (out / name).string() + "'");
    return f;
  }
  template <class T>
  T get(const std::string& key) const {
    return params.at(key).get<T>();
  }
};

inline AnySystem make_system(const json& spec) {
  if (spec.contains("file")) return finite_system_from_json(read_json_file(spec["file"].get<std::string>()));
  std::map<std::string, double> p;
  if (spec.contains("params"))
    for (auto it = spec["params"].begin(); it != spec["params"].end(); ++it) p[it.key()] = it.value().get<double>();
  std::vector<double> matrix;
  if (spec.contains("matrix")) matrix = spec["matrix"].get<std::vector<double>>();
  const std::string name = spec["name"];
  const auto& names = zoo_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw schema_error("unknown system '" + name + "'" + did_you_mean(name, names));
  return zoo_map(name, p, matrix);
}

inline std::vector<Vector> torus_samples(int dim, std::size_t count, std::uint64_t seed) {
  return quasi_random_points(dim, count, seed);
}

inline std::vector<std::string> numbered(const std::string& stem, int count) {
  std::vector<std::string> out;
  for (int j = 1; j <= count; ++j) out.push_back(stem + std::to_string(j));
  return out;
}

inline void coord_cells(CsvWriter& w, const Vector& x) {
  for (Eigen::Index j = 0; j < x.size(); ++j) w.cell(x[j]);
}

inline json point_json(const Vector& x) { return std::vector<double>(x.data(), x.data() + x.size()); }
inline json point_json(const State& s) { return s.index; }

// ---------------------------------------------------------------------------
// spectrum

inline void run_spectrum(RunContext& ctx, const AnySystem& any) {
  const auto n = ctx.get<std::size_t>("n");
  const double margin = ctx.get<double>("margin");
  ctx.stage = "estimate_spectrum";
  std::vector<std::vector<double>> exps;
  std::vector<double> weights;
  auto out = ctx.open("spectrum.csv");
  if (const auto* sys = std::get_if<TorusMap>(&any)) {
    const int d = sys->dim();
    const auto pts = torus_samples(d, ctx.get<std::size_t>("points"), ctx.seed);
    const auto specs = parallel_map(pts.size(), [&](std::size_t k) { return estimate_spectrum(*sys, pts[k], n); },
                                    ctx.workers);
    auto cols = numbered("x", d);
    for (auto& c : numbered("lambda_", d)) cols.push_back(c);
    cols.insert(cols.end(), {"residual", "n_used"});
    CsvWriter w(out, "spectrum", cols);
    for (std::size_t k = 0; k < specs.size(); ++k) {
      coord_cells(w, pts[k]);
      for (double e : specs[k].exponents) w.cell(e);
      w.cell(specs[k].residual).cell(specs[k].n_used).end_row();
      exps.push_back(specs[k].exponents);
      weights.push_back(1.0 / static_cast<double>(specs.size()));
    }
  } else {
    const auto& fsys = std::get<FiniteSystem>(any);
    const int d = fsys.dim();
    const auto specs = parallel_map(
        fsys.size(), [&](std::size_t s) { return estimate_spectrum(fsys, State{s}, n); }, ctx.workers);
    std::vector<std::string> cols{"state"};
    for (auto& c : numbered("lambda_", d)) cols.push_back(c);
    for (auto& c : numbered("exact_", d)) cols.push_back(c);
    cols.insert(cols.end(), {"residual", "n_used"});
    CsvWriter w(out, "spectrum-finite", cols);
    for (std::size_t s = 0; s < specs.size(); ++s) {
      const auto ex = exact_spectrum_periodic(fsys, State{s});
      w.cell(s);
      for (double e : specs[s].exponents) w.cell(e);
      for (double e : ex.exponents) w.cell(e);
      w.cell(specs[s].residual).cell(specs[s].n_used).end_row();
      exps.push_back(specs[s].exponents);
      weights.push_back(fsys.weights()[s]);
    }
  }
  const std::size_t d = exps.front().size();
  std::vector<double> mean(d, 0.0);
  double max_sum = 0.0, nuh = 0.0;
  for (std::size_t k = 0; k < exps.size(); ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      mean[j] += weights[k] * exps[k][j];
      s += exps[k][j];
    }
    max_sum = std::max(max_sum, std::abs(s));
    LyapunovSpectrum<Vector> tmp;
    tmp.exponents = exps[k];
    if (classify_index(tmp, margin).nuh) nuh += weights[k];
  }
  LyapunovSpectrum<Vector> ms;
  ms.exponents = mean;
  const IndexClass cls = classify_index(ms, margin);
  ctx.summary = json{{"samples", exps.size()},       {"mean_exponents", mean}, {"max_abs_sum", max_sum},
                     {"zero_sum_pass", max_sum <= 1e-6}, {"nuh_fraction", nuh},   {"mean_index", cls.index},
                     {"mean_nuh", cls.nuh}};
}

// ---------------------------------------------------------------------------
// dominate

template <class S, class P>
json domination_record(const S& sys, const P& x, const RunContext& ctx) {
  json rec{{"point", point_json(x)}};
  try {
    const auto split = estimate_splitting(sys, x, ctx.get<int>("index"), ctx.get<std::size_t>("horizon"),
                                          std::max<std::size_t>(1, ctx.get<std::size_t>("length")));
    const auto rep = test_domination(sys, split, ctx.get<std::size_t>("n"), ctx.get<std::size_t>("m_max"),
                                     ctx.get<double>("constant"));
    rec["k_range"] = {rep.k_first, rep.k_last};
    rec["n_star"] = rep.n_star ? json(*rep.n_star) : json(nullptr);
    rec["m_max"] = rep.m_max;
    rec["worst_ratio"] = rep.worst_ratio;
    rec["pass"] = rep.pass;
    rec["equivariance_error"] = split.equivariance_error;
    rec["min_angle"] = split.min_angle;
  } catch (const no_gap_error& e) {
    rec["pass"] = false;
    rec["error"] = e.what();
  }
  return rec;
}

inline void run_dominate(RunContext& ctx, const AnySystem& any) {
  ctx.stage = "test_domination";
  std::vector<json> recs;
  std::vector<double> weights;
  if (const auto* sys = std::get_if<TorusMap>(&any)) {
    const auto pts = torus_samples(sys->dim(), ctx.get<std::size_t>("points"), ctx.seed);
    recs = parallel_map(pts.size(), [&](std::size_t k) { return domination_record(*sys, pts[k], ctx); }, ctx.workers);
    weights.assign(pts.size(), 1.0 / static_cast<double>(pts.size()));
  } else {
    const auto& fsys = std::get<FiniteSystem>(any);
    recs = parallel_map(fsys.size(), [&](std::size_t s) { return domination_record(fsys, State{s}, ctx); },
                        ctx.workers);
    weights = fsys.weights();
  }
  auto out = ctx.open("domination.jsonl");
  double fraction = 0.0, worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < recs.size(); ++k) {
    write_jsonl(out, recs[k]);
    if (recs[k]["pass"].get<bool>()) fraction += weights[k];
    if (recs[k].contains("worst_ratio")) worst = std::min(worst, recs[k]["worst_ratio"].get<double>());
  }
  ctx.summary = json{{"samples", recs.size()}, {"fraction", fraction},
                     {"worst_ratio", std::isfinite(worst) ? json(worst) : json(nullptr)}};
}

// ---------------------------------------------------------------------------
// block

// (1/ell) log ||Df^ell(x)|E^cs(x)|| for nondecreasing ell <= ell_max. The
// product runs in E^cs coordinates along the estimated splitting.
class SmoothCsNorms {
 public:
  SmoothCsNorms(const TorusMap& sys, const std::vector<Vector>& pts, int index, std::size_t horizon,
                std::size_t ell_max, std::size_t workers) {
    blocks_ = parallel_map(
        pts.size(),
        [&](std::size_t k) {
          const auto split = estimate_splitting(sys, pts[k], index, horizon, ell_max + 1);
          std::vector<Matrix> out;
          for (std::size_t j = 0; j < ell_max; ++j) {
            Matrix basis(sys.dim(), sys.dim());
            basis << split.cs[j + 1], split.cu[j + 1];
            const Matrix c = basis.partialPivLu().solve(sys.jacobian(split.points[j]) * split.cs[j]);
            out.push_back(c.topRows(split.cs[j].cols()));
          }
          return out;
        },
        workers);
    for (const auto& b : blocks_) trackers_.emplace_back(Matrix::Identity(b.front().cols(), b.front().cols()));
  }

  std::vector<double> operator()(std::size_t ell) {
    if (ell < 1 || ell < pushed_) throw std::logic_error("SmoothCsNorms: ell must be positive and nondecreasing");
    if (ell > blocks_.front().size()) throw std::invalid_argument("SmoothCsNorms: ell beyond ell_max");
    for (; pushed_ < ell; ++pushed_)
      for (std::size_t k = 0; k < trackers_.size(); ++k) trackers_[k].push(blocks_[k][pushed_]);
    std::vector<double> out;
    for (const auto& t : trackers_) out.push_back(t.log_sv().front() / static_cast<double>(ell));
    return out;
  }

 private:
  std::vector<std::vector<Matrix>> blocks_;
  std::vector<ProductTracker> trackers_;
  std::size_t pushed_ = 0;
};

inline void block_row(CsvWriter& w, const BlockVerdict& v, bool end = true) {
  w.cell(v.member).cell(v.phi_star).cell(v.argmax);
  if (v.first_violation)
    w.cell(*v.first_violation);
  else
    w.cell("");
  w.cell(v.checked_to).cell(v.exact);
  if (end) w.end_row();
}

inline void run_block(RunContext& ctx, const AnySystem& any) {
  BlockParams bp;
  bp.ell = ctx.get<std::size_t>("ell");
  bp.index = ctx.get<int>("index");
  bp.horizon = ctx.get<std::size_t>("horizon");
  bp.side = parse_block_side(ctx.get<std::string>("side"));
  const double eta = ctx.get<double>("eta");
  std::size_t ell_max = ctx.get<std::size_t>("ell_max");
  auto out = ctx.open("block.csv");
  std::optional<BlockChoice> choice;
  std::string selection_note = "failure";
  double measure = 0.0;
  std::size_t samples = 0;
  if (const auto* sys = std::get_if<TorusMap>(&any)) {
    ctx.stage = "in_block";
    const auto pts = torus_samples(sys->dim(), ctx.get<std::size_t>("points"), ctx.seed);
    samples = pts.size();
    const auto n_max = ctx.get<std::size_t>("n_max");
    const auto verdicts = parallel_map(
        pts.size(),
        [&](std::size_t k) -> std::optional<BlockVerdict> {
          try {
            return in_block(*sys, bp, pts[k], n_max);
          } catch (const no_gap_error&) {
            return std::nullopt;
          }
        },
        ctx.workers);
    auto cols = numbered("x", sys->dim());
    cols.insert(cols.end(), {"member", "phi_star", "argmax", "first_violation", "checked_to", "exact"});
    CsvWriter w(out, "block", cols);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      coord_cells(w, pts[k]);
      BlockVerdict v;
      if (verdicts[k]) v = *verdicts[k];
      block_row(w, v);
      if (v.member) measure += 1.0 / static_cast<double>(pts.size());
    }
    ctx.stage = "choose_block_params";
    if (ell_max == 0) ell_max = 200;
    const auto lcs = parallel_map(
        pts.size(),
        [&](std::size_t k) { return estimate_spectrum(*sys, pts[k], 2000).exponents.at(bp.index); }, ctx.workers);
    SmoothCsNorms norms(*sys, pts, bp.index, bp.horizon, ell_max, ctx.workers);
    choice = choose_block_params(lcs, std::vector<double>(pts.size(), 1.0 / static_cast<double>(pts.size())), eta,
                                 std::ref(norms), {}, ell_max);
  } else {
    ctx.stage = "in_block_exact_periodic";
    const auto& fsys = std::get<FiniteSystem>(any);
    samples = fsys.size();
    std::vector<std::string> cols{"state",    "member",     "phi_star", "argmax",
                                  "first_violation", "checked_to", "exact",    "gap"};
    CsvWriter w(out, "block-finite", cols);
    std::vector<State> states;
    std::vector<double> wts, lcs;
    std::optional<std::size_t> gapless;
    for (std::size_t s = 0; s < fsys.size(); ++s) {
      BlockVerdict v;
      bool gap = true;
      try {
        v = in_block_exact_periodic(fsys, bp, State{s});
      } catch (const no_gap_error&) {
        gap = false;
      }
      w.cell(s);
      block_row(w, v, false);
      w.cell(gap).end_row();
      if (v.member) measure += fsys.weights()[s];
      if (fsys.weights()[s] > 0.0) {
        if (!gap && !gapless) gapless = s;
        states.push_back(State{s});
        wts.push_back(fsys.weights()[s]);
        lcs.push_back(lambda_cs(fsys, State{s}, bp.index));
      }
    }
    ctx.stage = "choose_block_params";
    if (ell_max == 0) ell_max = kEllMax;
    if (gapless) {
      selection_note = "no dominated splitting at state " + std::to_string(*gapless);
    } else {
      FiniteCsNorms norms(fsys, states, bp.index);
      choice = choose_block_params(lcs, wts, eta, std::ref(norms), {}, ell_max);
    }
  }
  ctx.summary = json{{"samples", samples},
                     {"block_measure", measure},
                     {"side", to_string(bp.side)},
                     {"ell", bp.ell},
                     {"eta", eta},
                     {"selection", choice ? json{{"alpha", choice->alpha}, {"ell", choice->ell}} : json(selection_note)}};
}

// ---------------------------------------------------------------------------
// decompose

inline void run_decompose(RunContext& ctx, const AnySystem& any) {
  const double radius = ctx.get<double>("radius");
  if (const auto* fsys = std::get_if<FiniteSystem>(&any)) {
    ctx.stage = "ergodic_decomposition_exact";
    const auto m = state_measure(*fsys);
    const auto kappa = ergodic_decomposition_exact(*fsys, m);
    std::size_t n = ctx.get<std::size_t>("n");
    if (n == 0) n = cycle_lcm(*fsys);
    const auto fam = indicator_family(fsys->size());
    ctx.stage = "estimate_decomposition";
    const auto est = estimate_decomposition(*fsys, m, n, fam, radius, ctx.workers);
    {
      auto f = ctx.open("decomposition.json");
      f << to_json(kappa).dump(2) << '\n';
    }
    {
      auto f = ctx.open("estimated.json");
      f << to_json(est).dump(2) << '\n';
    }
    auto out = ctx.open("variance.csv");
    CsvWriter w(out, "variance", {"state", "var_exact", "var_estimated", "l2_squared"});
    for (std::size_t s = 0; s < fsys->size(); ++s) {
      std::vector<double> phi(fsys->size(), -fsys->weights()[s]);
      phi[s] += 1.0;
      const std::function<double(const State&)> f = [&](const State& x) { return phi[x.index]; };
      const double l2 = l2_norm(f, m);
      w.cell(s).cell(variance(f, kappa, m)).cell(variance(f, est, m)).cell(l2 * l2).end_row();
    }
    ctx.summary = json{{"components_exact", kappa.size()},
                       {"components_estimated", est.size()},
                       {"n", n},
                       {"match", decompositions_match(kappa, est, fam, 1e-9, 1e-9)}};
    return;
  }
  const auto& sys = std::get<TorusMap>(any);
  ctx.stage = "estimate_decomposition";
  std::size_t n = ctx.get<std::size_t>("n");
  if (n == 0) n = 10000;
  const auto fam = fourier_family(sys.dim(), ctx.get<int>("degree"));
  const auto samples = AtomicMeasure<Vector>::uniform(torus_samples(sys.dim(), ctx.get<std::size_t>("points"), ctx.seed));
  const auto est = estimate_decomposition(sys, samples, n, fam, radius, ctx.workers);
  auto out = ctx.open("components.csv");
  const std::size_t shown = std::min<std::size_t>(fam.size(), 4);
  std::vector<std::string> cols{"component", "weight", "atoms"};
  for (auto& c : numbered("moment_", static_cast<int>(shown))) cols.push_back(c);
  CsvWriter w(out, "components", cols);
  for (std::size_t c = 0; c < est.size(); ++c) {
    const Vector mo = moments(est.components()[c], fam);
    w.cell(c).cell(est.weights()[c]).cell(est.components()[c].size());
    for (std::size_t j = 0; j < shown; ++j) w.cell(mo[static_cast<Eigen::Index>(j)]);
    w.end_row();
  }
  ctx.stage = "variance";
  const auto ref = grid_measure(sys.dim(), ctx.get<std::size_t>("grid"));
  auto vout = ctx.open("variance.csv");
  CsvWriter vw(vout, "variance-torus", {"function", "var_estimated", "l2_squared"});
  std::vector<double> buf(fam.size());
  for (std::size_t j = 0; j < std::min<std::size_t>(fam.size(), 8); ++j) {
    const std::function<double(const Vector&)> f = [&](const Vector& x) {
      fam.eval(x, buf);
      return buf[j];
    };
    const double l2 = l2_norm(f, ref);
    vw.cell(j).cell(variance(f, est, ref)).cell(l2 * l2).end_row();
  }
  ctx.summary = json{{"components_estimated", est.size()}, {"n", n}, {"family", fam.name()}, {"family_size", fam.size()}};
}

// ---------------------------------------------------------------------------
// disk

inline void run_disk(RunContext& ctx, const AnySystem& any) {
  const auto* sys = std::get_if<TorusMap>(&any);
  if (!sys) throw schema_error("'disk' needs a smooth system (system.name), not a finite system");
  const auto pv = ctx.get<std::vector<double>>("point");
  if (static_cast<int>(pv.size()) != sys->dim())
    throw schema_error("field 'params.point' must have " + std::to_string(sys->dim()) + " coordinates");
  const Vector x = Eigen::Map<const Vector>(pv.data(), static_cast<Eigen::Index>(pv.size()));
  TransformParams tp;
  tp.ell = ctx.get<std::size_t>("ell");
  tp.depth = ctx.get<std::size_t>("depth");
  tp.radius = ctx.get<double>("radius");
  tp.resolution = ctx.get<std::size_t>("resolution");
  tp.cone_aperture = ctx.get<double>("aperture");
  ctx.stage = "estimate_splitting";
  const auto split = estimate_splitting(*sys, x, ctx.get<int>("index"), ctx.get<std::size_t>("horizon"),
                                        tp.ell * tp.depth + 1);
  ctx.stage = "center_stable_disk";
  CsDisk disk;
  json search = nullptr;
  if (ctx.get<bool>("search")) {
    const auto rs = search_radius(*sys, split, tp, tp.radius);
    if (!rs.disk) throw cone_escape_error("no radius admits a disk: " + rs.last_error, 0, 0);
    disk = *rs.disk;
    search = json{{"requested", rs.requested}, {"achieved", rs.radius}, {"reached", rs.reached}};
  } else {
    disk = center_stable_disk(*sys, split, tp);
  }
  ctx.stage = "verify_contraction";
  const auto rep = verify_contraction(*sys, disk, ctx.get<std::size_t>("iterates"));
  auto out = ctx.open("disk.csv");
  const int dcs = disk.cs_dim(), dcu = static_cast<int>(disk.cu.cols());
  std::vector<std::string> cols{"node"};
  for (auto& c : numbered("u", dcs)) cols.push_back(c);
  for (auto& c : numbered("w", dcu)) cols.push_back(c);
  cols.push_back("tangent_angle");
  for (auto& c : numbered("x", sys->dim())) cols.push_back(c);
  cols.push_back("rate");
  CsvWriter w(out, "disk", cols);
  std::size_t r = 0;
  for (std::size_t q = 0; q < disk.values.size(); ++q) {
    w.cell(q);
    coord_cells(w, disk.params[q]);
    coord_cells(w, disk.values[q]);
    w.cell(disk.tangent_angle[q]);
    coord_cells(w, disk.point(*sys, q));
    if (q == disk.center_node)
      w.cell("");
    else
      w.cell(rep.rates[r++]);
    w.end_row();
  }
  const Matrix tangent = center_tangent(disk);
  ctx.summary = json{{"radius", disk.radius},
                     {"depth", disk.depth},
                     {"ell", disk.ell},
                     {"block_certified", disk.block_certified},
                     {"center_tangent", std::vector<double>(tangent.data(), tangent.data() + tangent.size())},
                     {"tangent_vs_cs", subspace_distance(tangent, disk.cs)},
                     {"max_tangent_angle", disk.max_tangent_angle()},
                     {"contraction_pass", rep.pass},
                     {"worst_rate", rep.worst_rate},
                     {"threshold", rep.threshold},
                     {"radius_search", search}};
}

// ---------------------------------------------------------------------------
// oracle

inline void run_oracle_cmd(RunContext& ctx) {
  const auto lemma = ctx.get<std::string>("lemma");
  const auto& lemmas = oracle_lemmas();
  if (std::find(lemmas.begin(), lemmas.end(), lemma) == lemmas.end())
    throw schema_error("unknown lemma '" + lemma + "'" + did_you_mean(lemma, lemmas));
  const auto count = ctx.get<std::size_t>("count");
  ctx.stage = "oracle " + lemma;
  auto recs = parallel_map(
      count,
      [&](std::size_t k) {
        json r = run_oracle(lemma, instance_seed(ctx.seed, k));
        r["instance"] = k;
        return r;
      },
      ctx.workers);
  auto out = ctx.open("oracle.jsonl");
  std::size_t pass = 0, applicable = 0, holds = 0;
  std::vector<std::uint64_t> failing;
  for (const json& r : recs) {
    write_jsonl(out, r);
    if (r["pass"].get<bool>())
      ++pass;
    else
      failing.push_back(r["seed"].get<std::uint64_t>());
    if (lemma == "block" && r["applicable"].get<bool>()) {
      ++applicable;
      holds += r["conclusion"].get<bool>();
    }
  }
  json summary{{"summary", true}, {"lemma", lemma}, {"count", count}, {"pass", pass},
               {"fail", count - pass}, {"failing_seeds", failing}};
  if (lemma == "block") {
    summary["applicable"] = applicable;
    summary["conclusion_holds"] = holds;
    summary["text"] = std::to_string(holds) + "/" + std::to_string(applicable) + " conclusion holds among applicable";
  } else {
    summary["text"] = std::to_string(pass) + "/" + std::to_string(count) + " instances pass";
  }
  write_jsonl(out, summary);
  ctx.summary = summary;
  if (!failing.empty()) {
    ctx.exit_code = 1;
    std::cerr << "property failures (" << failing.size() << "); reproduce with `erglab oracle --lemma " << lemma
              << " --replay SEED`. seeds:";
    for (auto s : failing) std::cerr << ' ' << s;
    std::cerr << '\n';
  }
}

// ---------------------------------------------------------------------------
// perturb

inline void run_perturb(RunContext& ctx) {
  const auto eps = ctx.get<std::vector<double>>("eps");
  const auto n = ctx.get<std::size_t>("n");
  const auto fam = fourier_family(2, ctx.get<int>("degree"));
  const auto pts = torus_samples(2, ctx.get<std::size_t>("points"), ctx.seed);
  struct Sample {
    std::vector<double> exponents;
    Vector moments;
  };
  auto measure = [&](const TorusMap& f) {
    return parallel_map(
        pts.size(),
        [&](std::size_t k) {
          return Sample{estimate_spectrum(f, pts[k], n).exponents, moments(birkhoff_empirical(f, pts[k], n), fam)};
        },
        ctx.workers);
  };
  ctx.stage = "perturb base";
  const auto base = measure(perturbed_cat_map(0.0));
  auto out = ctx.open("perturb.csv");
  CsvWriter w(out, "perturb",
              {"eps", "lambda1_l1", "lambda2_l1", "decomposition_distance", "integrated_distance", "mean_lambda1"});
  json rows = json::array();
  for (double e : eps) {
    ctx.stage = "perturb eps=" + format_double(e);
    const auto cur = measure(perturbed_cat_map(e));
    double l1 = 0.0, l2 = 0.0, dec = 0.0, mean1 = 0.0;
    Vector ib = Vector::Zero(static_cast<Eigen::Index>(fam.size())), ic = ib;
    const double wgt = 1.0 / static_cast<double>(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) {
      l1 += wgt * std::abs(cur[k].exponents[0] - base[k].exponents[0]);
      l2 += wgt * std::abs(cur[k].exponents[1] - base[k].exponents[1]);
      dec += wgt * moment_distance(cur[k].moments, base[k].moments, fam);
      mean1 += wgt * cur[k].exponents[0];
      ib += wgt * base[k].moments;
      ic += wgt * cur[k].moments;
    }
    const double integrated = moment_distance(ic, ib, fam);
    w.cell(e).cell(l1).cell(l2).cell(dec).cell(integrated).cell(mean1).end_row();
    rows.push_back(json{{"eps", e}, {"lambda1_l1", l1}, {"decomposition_distance", dec}});
  }
  ctx.summary = json{{"rows", rows}, {"samples", pts.size()}, {"n", n}};
}

// ---------------------------------------------------------------------------
// sweep

inline void run_sweep(RunContext& ctx) {
  const json& spec = ctx.cfg["system"];
  if (!spec.contains("name")) throw schema_error("'sweep' needs a zoo system (system.name)");
  const auto param = ctx.get<std::string>("param");
  const double from = ctx.get<double>("from"), to = ctx.get<double>("to");
  const auto steps = ctx.get<std::size_t>("steps");
  if (steps < 1) throw schema_error("field 'params.steps' must be at least 1");
  const auto n = ctx.get<std::size_t>("n");
  const double margin = ctx.get<double>("margin");
  auto out = ctx.open("sweep.csv");
  std::unique_ptr<CsvWriter> w;
  json rows = json::array();
  for (std::size_t k = 0; k < steps; ++k) {
    const double v = steps == 1 ? from : from + (to - from) * static_cast<double>(k) / static_cast<double>(steps - 1);
    json s = spec;
    s["params"][param] = v;
    const TorusMap sys = std::get<TorusMap>(make_system(s));
    const int d = sys.dim();
    if (!w) {
      std::vector<std::string> cols{"param", "value"};
      for (auto& c : numbered("lambda_", d)) cols.push_back(c);
      cols.insert(cols.end(), {"nuh_fraction", "index", "nuh"});
      w = std::make_unique<CsvWriter>(out, "sweep", cols);
    }
    ctx.stage = "sweep " + param + "=" + format_double(v);
    const auto pts = torus_samples(d, ctx.get<std::size_t>("points"), ctx.seed);
    const auto specs = parallel_map(pts.size(), [&](std::size_t j) { return estimate_spectrum(sys, pts[j], n); },
                                    ctx.workers);
    LyapunovSpectrum<Vector> mean;
    mean.exponents.assign(d, 0.0);
    mean.n_used = n;
    double nuh = 0.0;
    for (const auto& sp : specs) {
      for (int j = 0; j < d; ++j) mean.exponents[j] += sp.exponents[j] / static_cast<double>(specs.size());
      if (classify_index(sp, margin).nuh) nuh += 1.0 / static_cast<double>(specs.size());
    }
    const IndexClass cls = classify_index(mean, margin);
    w->cell(param).cell(v);
    for (double e : mean.exponents) w->cell(e);
    w->cell(nuh).cell(cls.index).cell(cls.nuh).end_row();
    rows.push_back(json{{"value", v}, {"lambda_1", mean.exponents[0]}, {"nuh", cls.nuh}});
  }
  ctx.summary = json{{"param", param}, {"rows", rows}};
}

}  // namespace erglab::cli
