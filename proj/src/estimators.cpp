#include "transportlab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <json.hpp>

#include "transportlab/rng.hpp"

namespace transportlab {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::string_view estimator_name(EstimatorId e) {
  switch (e) {
    case EstimatorId::GFormula: return "gformula";
    case EstimatorId::IPW: return "ipw";
    case EstimatorId::IPWNormalized: return "ipw_normalized";
  }
  return "gformula";
}

EstimatorId estimator_from_name(std::string_view s) {
  if (s == "gformula" || s == "g-formula") return EstimatorId::GFormula;
  if (s == "ipw") return EstimatorId::IPW;
  if (s == "ipw_normalized" || s == "ipw-normalized") return EstimatorId::IPWNormalized;
  fail(Err::InvalidEstimand, "unknown estimator " + std::string(s));
}

ContTable ContTable::from_dataset(const Dataset& d) {
  if (d.size() == 0) fail(Err::EmptyDataset, "dataset has no rows");
  int max_x = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.x[i] < 0) fail(Err::InvalidSpec, "covariate masked on row " + std::to_string(i));
    max_x = std::max(max_x, static_cast<int>(d.x[i]));
  }
  ContTable t;
  t.n_x = max_x + 1;
  t.s0.assign(t.n_x, 0);
  t.s1zy.assign(t.n_x * 4, 0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const int x = d.x[i];
    if (d.s[i] == 0) {
      ++t.s0[x];
    } else if (d.s[i] == 1) {
      if (d.z[i] == kNA || d.y[i] == kNA)
        fail(Err::InvalidSpec, "masked assignment or outcome on participant row " +
                                   std::to_string(i));
      ++t.s1zy[x * 4 + d.z[i] * 2 + d.y[i]];
    } else {
      fail(Err::InvalidSpec, "participation must be 0 or 1 on row " + std::to_string(i));
    }
  }
  return t;
}

std::int64_t ContTable::n_s0() const {
  std::int64_t n = 0;
  for (auto c : s0) n += c;
  return n;
}

std::int64_t ContTable::n_s1() const {
  std::int64_t n = 0;
  for (auto c : s1zy) n += c;
  return n;
}

NuisanceTables fit_nuisances(const ContTable& t, bool laplace_half) {
  if (t.n() == 0) fail(Err::EmptyDataset, "no rows to fit nuisance tables on");
  NuisanceTables nt;
  nt.n_x = t.n_x;
  nt.laplace = laplace_half;
  nt.counts = t;
  nt.p_s1 = static_cast<double>(t.n_s1()) / static_cast<double>(t.n());
  nt.p_s1_given_x.assign(t.n_x, kNaN);
  nt.p_z1_given_xs1.assign(t.n_x, kNaN);
  nt.y_mean_xs1z.assign(t.n_x * 2, kNaN);
  for (int x = 0; x < t.n_x; ++x) {
    const std::int64_t nx = t.n_at(x), n1 = t.n_s1_at(x);
    if (laplace_half) {
      if (nx > 0) nt.p_s1_given_x[x] = (n1 + 0.5) / (nx + 1.0);
      if (nx > 0) nt.p_z1_given_xs1[x] = (t.n_s1z(x, 1) + 0.5) / (n1 + 1.0);
      for (int z = 0; z < 2; ++z)
        if (nx > 0)
          nt.y_mean_xs1z[x * 2 + z] = (t.n_s1zy(x, z, 1) + 0.5) / (t.n_s1z(x, z) + 1.0);
    } else {
      if (nx > 0) nt.p_s1_given_x[x] = static_cast<double>(n1) / nx;
      if (n1 > 0) nt.p_z1_given_xs1[x] = static_cast<double>(t.n_s1z(x, 1)) / n1;
      for (int z = 0; z < 2; ++z)
        if (t.n_s1z(x, z) > 0)
          nt.y_mean_xs1z[x * 2 + z] =
              static_cast<double>(t.n_s1zy(x, z, 1)) / t.n_s1z(x, z);
    }
  }
  return nt;
}

NuisanceTables fit_nuisances(const Dataset& d, bool laplace_half) {
  return fit_nuisances(ContTable::from_dataset(d), laplace_half);
}

namespace {

std::string cell_name(int x, int z) {
  return "(x=" + std::to_string(x) + ", s=1, z=" + std::to_string(z) + ")";
}

// Weight denominators must be usable wherever the numerator has mass.
void require_cell(const NuisanceTables& nt, const ContTable& t, int x, int z,
                  bool need_participation) {
  if (x >= nt.n_x)
    fail(Err::PositivityViolation,
         "no nuisance estimates for covariate level x=" + std::to_string(x));
  if (need_participation) {
    const double ps = nt.p_s1_given_x[x];
    if (std::isnan(ps) || ps <= 0.0)
      fail(Err::PositivityViolation,
           "(x=" + std::to_string(x) + ", s=1) is empty: participation probability unusable");
  }
  const double ym = nt.y_mean_xs1z[x * 2 + z];
  if (std::isnan(ym))
    fail(Err::PositivityViolation, cell_name(x, z) + " is empty: outcome mean undefined");
  const double pz = z == 1 ? nt.p_z1_given_xs1[x] : 1.0 - nt.p_z1_given_xs1[x];
  if (std::isnan(pz) || pz <= 0.0)
    fail(Err::PositivityViolation, cell_name(x, z) + " is empty: assignment probability zero");
  (void)t;
}

double checked_weight(double w) {
  if (!std::isfinite(w)) fail(Err::NonfiniteWeight, "inverse-probability weight is not finite");
  return w;
}

double normalize(double num, double wsum) {
  if (!(wsum > 0.0))
    fail(Err::PositivityViolation, "normalizing weight sum is zero: no weighted rows in support");
  return num / wsum;
}

}  // namespace

double gformula_target(const ContTable& t, const NuisanceTables& nt, int z) {
  const std::int64_t n = t.n();
  if (n == 0) fail(Err::EmptyDataset, "dataset has no rows");
  double acc = 0.0;
  for (int x = 0; x < t.n_x; ++x) {
    if (t.n_at(x) == 0) continue;
    require_cell(nt, t, x, z, false);
    acc += static_cast<double>(t.n_at(x)) / n * nt.y_mean_xs1z[x * 2 + z];
  }
  return acc;
}

double ipw_target(const ContTable& t, const NuisanceTables& nt, int z, bool normalized) {
  const std::int64_t n = t.n();
  if (n == 0) fail(Err::EmptyDataset, "dataset has no rows");
  double num = 0.0, wsum = 0.0;
  for (int x = 0; x < t.n_x; ++x) {
    if (t.n_at(x) == 0) continue;
    require_cell(nt, t, x, z, true);
    const double ps = nt.p_s1_given_x[x];
    const double pz = z == 1 ? nt.p_z1_given_xs1[x] : 1.0 - nt.p_z1_given_xs1[x];
    const double w = checked_weight(1.0 / (ps * pz));
    num += t.n_s1zy(x, z, 1) * w;
    wsum += t.n_s1z(x, z) * w;
  }
  return normalized ? normalize(num, wsum) : num / n;
}

double gformula_subset(const ContTable& t, const NuisanceTables& nt, int z) {
  const std::int64_t n0 = t.n_s0();
  if (t.n() == 0) fail(Err::EmptyDataset, "dataset has no rows");
  if (n0 == 0) fail(Err::NoNonParticipants, "no s=0 rows: the non-randomized subset is empty");
  double acc = 0.0;
  for (int x = 0; x < t.n_x; ++x) {
    if (t.n_s0_at(x) == 0) continue;
    require_cell(nt, t, x, z, true);
    acc += static_cast<double>(t.n_s0_at(x)) / n0 * nt.y_mean_xs1z[x * 2 + z];
  }
  return acc;
}

double ipw_subset(const ContTable& t, const NuisanceTables& nt, int z, bool normalized) {
  const std::int64_t n0 = t.n_s0();
  if (t.n() == 0) fail(Err::EmptyDataset, "dataset has no rows");
  if (n0 == 0) fail(Err::NoNonParticipants, "no s=0 rows: the non-randomized subset is empty");
  double num = 0.0, wsum = 0.0;
  for (int x = 0; x < t.n_x; ++x) {
    // Demand the same cells the outcome model needs, so both estimators
    // accept and reject exactly the same tables.
    if (t.n_s0_at(x) > 0) require_cell(nt, t, x, z, true);
    if (t.n_s1z(x, z) == 0) continue;  // weight support is the participant cells
    const double ps = nt.p_s1_given_x[x];
    const double pz = z == 1 ? nt.p_z1_given_xs1[x] : 1.0 - nt.p_z1_given_xs1[x];
    const double w = checked_weight((1.0 - ps) / (ps * pz));
    num += t.n_s1zy(x, z, 1) * w;
    wsum += t.n_s1z(x, z) * w;
  }
  // Odds-weighted participant outcomes standardize to the non-participants.
  return normalized ? normalize(num, wsum) : num / n0;
}

double trial_population(const ContTable& t, const NuisanceTables& nt, int z, EstimatorId form) {
  const std::int64_t n1 = t.n_s1();
  if (t.n() == 0) fail(Err::EmptyDataset, "dataset has no rows");
  if (n1 == 0) fail(Err::NoParticipants, "no s=1 rows: the trial population is empty");
  if (form == EstimatorId::GFormula) {
    double acc = 0.0;
    for (int x = 0; x < t.n_x; ++x) {
      if (t.n_s1_at(x) == 0) continue;
      require_cell(nt, t, x, z, false);
      acc += static_cast<double>(t.n_s1_at(x)) / n1 * nt.y_mean_xs1z[x * 2 + z];
    }
    return acc;
  }
  double num = 0.0, wsum = 0.0;
  for (int x = 0; x < t.n_x; ++x) {
    if (t.n_s1_at(x) == 0) continue;
    require_cell(nt, t, x, z, false);
    const double pz = z == 1 ? nt.p_z1_given_xs1[x] : 1.0 - nt.p_z1_given_xs1[x];
    const double w = checked_weight(1.0 / pz);
    num += t.n_s1zy(x, z, 1) * w;
    wsum += t.n_s1z(x, z) * w;
  }
  return form == EstimatorId::IPWNormalized ? normalize(num, wsum) : num / n1;
}

double gformula_target(const Dataset& d, const NuisanceTables& nt, int z) {
  return gformula_target(ContTable::from_dataset(d), nt, z);
}
double ipw_target(const Dataset& d, const NuisanceTables& nt, int z, bool normalized) {
  return ipw_target(ContTable::from_dataset(d), nt, z, normalized);
}
double gformula_subset(const Dataset& d, const NuisanceTables& nt, int z) {
  return gformula_subset(ContTable::from_dataset(d), nt, z);
}
double ipw_subset(const Dataset& d, const NuisanceTables& nt, int z) {
  return ipw_subset(ContTable::from_dataset(d), nt, z, false);
}
double trial_population(const Dataset& d, const NuisanceTables& nt, int z, EstimatorId form) {
  return trial_population(ContTable::from_dataset(d), nt, z, form);
}

double point_estimate(const ContTable& t, const NuisanceTables& nt, Population pop,
                      EstimatorId est, int z) {
  switch (pop) {
    case Population::Target:
      if (est == EstimatorId::GFormula) return gformula_target(t, nt, z);
      return ipw_target(t, nt, z, est == EstimatorId::IPWNormalized);
    case Population::NonRandomizedSubset:
      if (est == EstimatorId::GFormula) return gformula_subset(t, nt, z);
      return ipw_subset(t, nt, z, est == EstimatorId::IPWNormalized);
    case Population::TrialPopulation:
      return trial_population(t, nt, z, est);
  }
  fail(Err::InvalidEstimand, "unreachable population");
}

namespace {

// Multinomial table resample: n draws over the 5*n_x sufficient cells by the
// conditional-binomial walk. One seed-derived engine per replicate keeps the
// result independent of scheduling.
ContTable resample_table(const ContTable& t, std::uint64_t seed, int replicate) {
  std::mt19937_64 eng(mix64(mix64(seed) ^ static_cast<std::uint64_t>(replicate)));
  const std::int64_t n = t.n();
  std::vector<std::int64_t> cells;
  cells.reserve(t.n_x * 5);
  for (int x = 0; x < t.n_x; ++x) {
    cells.push_back(t.s0[x]);
    for (int k = 0; k < 4; ++k) cells.push_back(t.s1zy[x * 4 + k]);
  }
  std::vector<std::int64_t> out(cells.size(), 0);
  std::int64_t left = n, mass = n;
  for (std::size_t i = 0; i < cells.size() && left > 0; ++i) {
    if (cells[i] == 0) continue;
    if (cells[i] == mass) {
      out[i] = left;
      left = 0;
      break;
    }
    std::binomial_distribution<std::int64_t> bin(left,
                                                 static_cast<double>(cells[i]) / mass);
    out[i] = bin(eng);
    left -= out[i];
    mass -= cells[i];
  }
  ContTable r;
  r.n_x = t.n_x;
  r.s0.assign(t.n_x, 0);
  r.s1zy.assign(t.n_x * 4, 0);
  std::size_t i = 0;
  for (int x = 0; x < t.n_x; ++x) {
    r.s0[x] = out[i++];
    for (int k = 0; k < 4; ++k) r.s1zy[x * 4 + k] = out[i++];
  }
  return r;
}

double arm_or_contrast(const ContTable& t, const NuisanceTables& nt, const Estimand& e,
                       EstimatorId est) {
  if (is_contrast(e.kind))
    return point_estimate(t, nt, e.population, est, e.z) -
           point_estimate(t, nt, e.population, est, e.z_alt);
  return point_estimate(t, nt, e.population, est, e.z);
}

}  // namespace

EstimateReport estimate(const ContTable& t, const Estimand& e, EstimatorId est,
                        const BootstrapConfig& bs, bool laplace_half) {
  validate_estimand(e);
  const NuisanceTables nt = fit_nuisances(t, laplace_half);

  EstimateReport rep;
  rep.estimand = e;
  rep.estimator = est;
  rep.n = static_cast<std::size_t>(t.n());
  rep.point = arm_or_contrast(t, nt, e, est);

  rep.replicate_values.reserve(bs.replicates);
  double sum = 0.0, sum2 = 0.0;
  int used = 0;
  for (int r = 0; r < bs.replicates; ++r) {
    double value = kNaN;
    try {
      const ContTable rt = resample_table(t, bs.seed, r);
      const NuisanceTables rnt = fit_nuisances(rt, laplace_half);
      value = arm_or_contrast(rt, rnt, e, est);
    } catch (const Error&) {
      // replicate lost a required cell; dropped from the spread estimate
    }
    rep.replicate_values.push_back(value);
    if (!std::isnan(value)) {
      sum += value;
      sum2 += value * value;
      ++used;
    }
  }
  rep.replicates_used = used;
  rep.mc_se = used >= 2 ? std::sqrt(std::max(0.0, (sum2 - sum * sum / used) / (used - 1)))
                        : kNaN;
  return rep;
}

EstimateReport estimate(const Dataset& d, const Estimand& e, EstimatorId est,
                        const BootstrapConfig& bs, bool laplace_half) {
  EstimateReport rep = estimate(ContTable::from_dataset(d), e, est, bs, laplace_half);
  rep.n = d.size();
  rep.seed = d.provenance.seed;
  rep.scenario = std::string(scenario_name(d.provenance.scenario));
  return rep;
}

EstimateReport contrast(const EstimateReport& e1, const EstimateReport& e2) {
  if (e1.estimator != e2.estimator)
    fail(Err::MismatchedEstimands, "contrast needs the same estimator on both arms");
  if (e1.estimand.population != e2.estimand.population)
    fail(Err::MismatchedEstimands, "contrast needs the same population on both arms");
  if (e1.estimand.kind != e2.estimand.kind || is_contrast(e1.estimand.kind))
    fail(Err::MismatchedEstimands, "contrast combines two mean estimates of the same kind");
  if (e1.estimand.z == e2.estimand.z)
    fail(Err::MismatchedEstimands, "contrast arms must differ");

  EstimateReport rep;
  rep.estimand.kind = e1.estimand.kind == EstimandKind::MeanJoint ? EstimandKind::ContrastJoint
                                                                  : EstimandKind::ContrastAssign;
  rep.estimand.population = e1.estimand.population;
  rep.estimand.z = e1.estimand.z;
  rep.estimand.z_alt = e2.estimand.z;
  rep.estimator = e1.estimator;
  rep.n = e1.n;
  rep.seed = e1.seed;
  rep.scenario = e1.scenario;
  rep.point = e1.point - e2.point;

  const std::size_t pairs = std::min(e1.replicate_values.size(), e2.replicate_values.size());
  double sum = 0.0, sum2 = 0.0;
  int used = 0;
  for (std::size_t r = 0; r < pairs; ++r) {
    const double a = e1.replicate_values[r], b = e2.replicate_values[r];
    if (std::isnan(a) || std::isnan(b)) {
      rep.replicate_values.push_back(kNaN);
      continue;
    }
    const double v = a - b;
    rep.replicate_values.push_back(v);
    sum += v;
    sum2 += v * v;
    ++used;
  }
  rep.replicates_used = used;
  rep.mc_se = used >= 2 ? std::sqrt(std::max(0.0, (sum2 - sum * sum / used) / (used - 1)))
                        : kNaN;
  return rep;
}

void annotate_truth(EstimateReport& rep, const ScenarioSpec& spec) {
  rep.oracle = oracle_truth(spec, rep.estimand);
  rep.functional = functional_truth(spec, rep.estimand);
  rep.abs_bias = std::fabs(rep.point - *rep.oracle);
  rep.asymptotic_bias = std::fabs(*rep.functional - *rep.oracle);
}

namespace {

nlohmann::ordered_json report_json(const EstimateReport& rep) {
  nlohmann::ordered_json j;
  j["scenario"] = rep.scenario;
  j["estimand"] = {{"kind", std::string(kind_name(rep.estimand.kind))},
                   {"population", std::string(population_name(rep.estimand.population))},
                   {"z", rep.estimand.z}};
  if (is_contrast(rep.estimand.kind)) j["estimand"]["z_alt"] = rep.estimand.z_alt;
  j["estimator"] = std::string(estimator_name(rep.estimator));
  j["point"] = rep.point;
  j["mc_se"] = rep.mc_se;
  j["bootstrap_replicates_used"] = rep.replicates_used;
  if (rep.oracle) j["oracle"] = *rep.oracle;
  if (rep.abs_bias) j["abs_bias"] = *rep.abs_bias;
  if (rep.functional) j["asymptotic_value"] = *rep.functional;
  if (rep.asymptotic_bias) j["asymptotic_bias"] = *rep.asymptotic_bias;
  j["positivity_ok"] = rep.positivity_ok;
  j["n"] = rep.n;
  j["seed"] = rep.seed;
  return j;
}

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os.precision(12);
  os << *v;
  return os.str();
}

}  // namespace

std::string report_to_json_text(const EstimateReport& rep) {
  return report_json(rep).dump(2) + "\n";
}

std::string reports_csv_header() {
  return "scenario,population,kind,z,z_alt,estimator,point,mc_se,oracle,abs_bias,"
         "asymptotic_value,asymptotic_bias,n,seed\n";
}

std::string report_to_csv_row(const EstimateReport& rep) {
  std::ostringstream os;
  os.precision(12);
  os << rep.scenario << ',' << population_name(rep.estimand.population) << ','
     << kind_name(rep.estimand.kind) << ',' << rep.estimand.z << ','
     << (is_contrast(rep.estimand.kind) ? std::to_string(rep.estimand.z_alt) : "") << ','
     << estimator_name(rep.estimator) << ',' << rep.point << ',' << rep.mc_se << ','
     << fmt_opt(rep.oracle) << ',' << fmt_opt(rep.abs_bias) << ',' << fmt_opt(rep.functional)
     << ',' << fmt_opt(rep.asymptotic_bias) << ',' << rep.n << ',' << rep.seed << '\n';
  return os.str();
}

PositivityReport positivity_report(const Dataset& d) {
  const ContTable t = ContTable::from_dataset(d);
  PositivityReport rep;
  for (int x = 0; x < t.n_x; ++x) {
    PositivityRow row;
    row.x = x;
    row.n_total = t.n_at(x);
    row.n_s1 = t.n_s1_at(x);
    row.p_s1 = row.n_total > 0 ? static_cast<double>(row.n_s1) / row.n_total : kNaN;
    row.p_z1 = row.n_s1 > 0 ? static_cast<double>(t.n_s1z(x, 1)) / row.n_s1 : kNaN;
    row.participation_ok = row.n_total > 0 && row.n_s1 > 0 && row.n_s1 < row.n_total;
    for (int z = 0; z < 2; ++z)
      row.assignment_ok[z] = row.n_s1 == 0 || t.n_s1z(x, z) > 0;
    rep.all_ok = rep.all_ok && row.participation_ok && row.assignment_ok[0] &&
                 row.assignment_ok[1];
    rep.rows.push_back(row);
  }
  return rep;
}

std::string positivity_to_text(const PositivityReport& rep) {
  std::ostringstream os;
  os << "x      n   n_s1  P(S=1|x)  P(Z=1|x,S=1)  participation  assignment z=0  assignment z=1\n";
  for (const auto& r : rep.rows) {
    os << r.x << "  " << r.n_total << "  " << r.n_s1 << "  ";
    os.precision(4);
    os << r.p_s1 << "  " << r.p_z1 << "  " << (r.participation_ok ? "ok" : "VIOLATION") << "  "
       << (r.assignment_ok[0] ? "ok" : "VIOLATION") << "  "
       << (r.assignment_ok[1] ? "ok" : "VIOLATION") << '\n';
  }
  os << (rep.all_ok ? "positivity: ok\n" : "positivity: VIOLATIONS PRESENT\n");
  return os.str();
}

std::string positivity_to_json_text(const PositivityReport& rep) {
  nlohmann::ordered_json j;
  j["all_ok"] = rep.all_ok;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rep.rows) {
    nlohmann::ordered_json row;
    row["x"] = r.x;
    row["n"] = r.n_total;
    row["n_s1"] = r.n_s1;
    if (!std::isnan(r.p_s1)) row["p_s1"] = r.p_s1;
    if (!std::isnan(r.p_z1)) row["p_z1"] = r.p_z1;
    row["participation_ok"] = r.participation_ok;
    row["assignment_ok"] = {r.assignment_ok[0], r.assignment_ok[1]};
    j["rows"].push_back(row);
  }
  return j.dump(2) + "\n";
}

}  // namespace transportlab
