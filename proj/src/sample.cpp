#include "transportlab/sample.hpp"

#include <algorithm>
#include <thread>

#include "transportlab/rng.hpp"

namespace transportlab {

namespace {

// Per-node noise streams; base names shared across regimes so counterfactual
// coupling (common random numbers) holds row by row.
struct Streams {
  std::uint64_t x = stream_of("X");
  std::uint64_t u[2] = {0, 0};
  std::uint64_t s = stream_of("S");
  std::uint64_t z = stream_of("Z");
  std::uint64_t a = stream_of("A");
  std::uint64_t y = stream_of("Y");

  explicit Streams(const ScenarioSpec& spec) {
    const auto names = spec.latent_names();
    for (std::size_t k = 0; k < names.size(); ++k) u[k] = stream_of(names[k]);
  }
};

struct Row {
  int x, u, s, z, a, y;
};

int draw_categorical(double unif, const double* probs, int n) {
  double acc = 0.0;
  for (int v = 0; v + 1 < n; ++v) {
    acc += probs[v];
    if (unif < acc) return v;
  }
  return n - 1;
}

Row draw_row(const CompiledScenario& cs, const Streams& st, std::uint64_t seed, std::uint64_t row,
             const RegimeSpec& regime) {
  const ScenarioSpec& sp = cs.spec();
  Row r{};
  r.x = draw_categorical(uniform01(seed, st.x, row), sp.x_probs.data(), cs.n_x());

  const auto latents = sp.latent_names();
  r.u = 0;
  for (std::size_t k = 0; k < latents.size(); ++k)
    if (uniform01(seed, st.u[k], row) < sp.latent_probs.at(latents[k])) r.u |= 1 << k;

  r.s = regime.regime == Regime::DoS1Z ? 1
                                       : uniform01(seed, st.s, row) < cs.p_s1(r.x, r.u) ? 1 : 0;
  r.z = regime.regime == Regime::Observational
            ? (uniform01(seed, st.z, row) < cs.p_z1(r.x, r.s, r.u) ? 1 : 0)
            : regime.z;

  if (cs.deterministic_copy_a()) {
    r.a = r.z;
  } else {
    double probs[3];
    for (int a = 0; a < cs.n_a(); ++a) probs[a] = cs.p_a(r.x, r.s, r.z, r.u, a);
    r.a = draw_categorical(uniform01(seed, st.a, row), probs, cs.n_a());
  }
  r.y = uniform01(seed, st.y, row) < cs.p_y1(r.x, r.a, r.u) ? 1 : 0;
  return r;
}

void fill_range(Dataset& d, const CompiledScenario& cs, const Streams& st, std::uint64_t seed,
                const RegimeSpec& regime, bool mask, std::size_t begin, std::size_t end) {
  for (std::size_t i = begin; i < end; ++i) {
    const Row r = draw_row(cs, st, seed, i, regime);
    d.x[i] = static_cast<std::int8_t>(r.x);
    d.s[i] = static_cast<std::int8_t>(r.s);
    if (mask && r.s == 0) {
      d.z[i] = kNA;
      d.a[i] = kNA;
      d.y[i] = kNA;
    } else {
      d.z[i] = static_cast<std::int8_t>(r.z);
      d.a[i] = static_cast<std::int8_t>(r.a);
      d.y[i] = static_cast<std::int8_t>(r.y);
    }
  }
}

Dataset sample_impl(const ScenarioSpec& spec, const RegimeSpec& regime, std::size_t n, bool mask,
                    std::uint64_t seed, int jobs) {
  if (n < 1) fail(Err::InvalidSpec, "sample size must be at least 1");
  const CompiledScenario cs(spec);
  const Streams st(spec);

  Dataset d;
  d.resize(n);
  d.provenance = Provenance{spec.id, regime, false, mask && regime.regime == Regime::Observational,
                            seed};

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t want = jobs <= 0 ? hw : static_cast<std::size_t>(jobs);
  const std::size_t n_threads = std::max<std::size_t>(1, std::min({want, std::size_t(hw), n / 4096}));
  if (n_threads == 1) {
    fill_range(d, cs, st, seed, regime, d.provenance.masked, 0, n);
    return d;
  }
  std::vector<std::thread> threads;
  const std::size_t chunk = (n + n_threads - 1) / n_threads;
  for (std::size_t t = 0; t < n_threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([&, begin, end] {
      fill_range(d, cs, st, seed, regime, d.provenance.masked, begin, end);
    });
  }
  for (auto& th : threads) th.join();
  return d;
}

}  // namespace

Dataset sample_observational(const ScenarioSpec& spec, std::size_t n, bool mask_nonparticipants,
                             std::uint64_t seed, int jobs) {
  return sample_impl(spec, RegimeSpec{Regime::Observational, -1}, n, mask_nonparticipants, seed,
                     jobs);
}

Dataset sample_interventional(const ScenarioSpec& spec, const RegimeSpec& regime, std::size_t n,
                              std::uint64_t seed, int jobs) {
  if (regime.regime == Regime::Observational)
    fail(Err::InvalidQuery, "interventional sampling needs do(Z=z) or do(S=1,Z=z)");
  if (regime.z != 0 && regime.z != 1)
    fail(Err::InvalidQuery, "assignment arm must be 0 or 1, got " + std::to_string(regime.z));
  return sample_impl(spec, regime, n, false, seed, jobs);
}

Dataset sample_non_nested(const ScenarioSpec& spec, std::size_t n_participants,
                          std::size_t n_nonparticipants, bool mask_nonparticipants,
                          std::uint64_t seed) {
  if (n_participants < 1 || n_nonparticipants < 1)
    fail(Err::InvalidSpec, "both strata need at least 1 row");
  const CompiledScenario cs(spec);
  const Streams st(spec);
  const RegimeSpec obs{Regime::Observational, -1};

  Dataset d;
  d.resize(n_participants + n_nonparticipants);
  d.provenance = Provenance{spec.id, obs, true, mask_nonparticipants, seed};

  // Walk a virtual observational row stream, keeping rows until each stratum's
  // quota fills. Deterministic: purely a function of (spec, seed, quotas).
  std::size_t got1 = 0, got0 = 0, out = 0;
  for (std::uint64_t vrow = 0; got1 < n_participants || got0 < n_nonparticipants; ++vrow) {
    const Row r = draw_row(cs, st, seed, vrow, obs);
    if (r.s == 1) {
      if (got1 == n_participants) continue;
      ++got1;
    } else {
      if (got0 == n_nonparticipants) continue;
      ++got0;
    }
    d.x[out] = static_cast<std::int8_t>(r.x);
    d.s[out] = static_cast<std::int8_t>(r.s);
    if (mask_nonparticipants && r.s == 0) {
      d.z[out] = kNA;
      d.a[out] = kNA;
      d.y[out] = kNA;
    } else {
      d.z[out] = static_cast<std::int8_t>(r.z);
      d.a[out] = static_cast<std::int8_t>(r.a);
      d.y[out] = static_cast<std::int8_t>(r.y);
    }
    ++out;
  }
  return d;
}

namespace {

std::string describe_row(std::size_t i, const char* what, int want, int got) {
  return "row " + std::to_string(i) + ": " + what + " wants " + std::to_string(want) +
         ", counterfactual draw gives " + std::to_string(got);
}

}  // namespace

ConsistencyReport consistency_check(const ScenarioSpec& spec, std::size_t n, std::uint64_t seed,
                                    std::optional<std::uint64_t> counterfactual_seed) {
  const std::uint64_t cf_seed = counterfactual_seed.value_or(seed);
  const Dataset obs = sample_observational(spec, n, false, seed);
  const Dataset do_s1[2] = {
      sample_interventional(spec, RegimeSpec{Regime::DoS1Z, 0}, n, cf_seed),
      sample_interventional(spec, RegimeSpec{Regime::DoS1Z, 1}, n, cf_seed),
  };
  const Dataset do_z[2] = {
      sample_interventional(spec, RegimeSpec{Regime::DoZ, 0}, n, cf_seed),
      sample_interventional(spec, RegimeSpec{Regime::DoZ, 1}, n, cf_seed),
  };
  const bool copy_a = spec.id == ScenarioId::Fig1PerfectAdherence;
  const Streams st(spec);

  ConsistencyReport rep;
  rep.rows = n;
  auto flag = [&](std::string msg) {
    ++rep.violations;
    if (rep.first_counterexample.empty()) rep.first_counterexample = std::move(msg);
  };

  for (std::size_t i = 0; i < n; ++i) {
    if (obs.s[i] == 1) {
      // Observed assignment is the counterfactual assignment under scaled-up
      // participation: both are the trial randomizer's draw on Z's stream.
      const int z_s1 = uniform01(cf_seed, st.z, i) < spec.trial_assign_prob ? 1 : 0;
      if (z_s1 != obs.z[i]) flag(describe_row(i, "Z under do(S=1)", obs.z[i], z_s1));
      const int z = obs.z[i];
      if (do_s1[z].a[i] != obs.a[i])
        flag(describe_row(i, "A under matching do(S=1,Z=z)", obs.a[i], do_s1[z].a[i]));
      if (do_s1[z].y[i] != obs.y[i])
        flag(describe_row(i, "Y under matching do(S=1,Z=z)", obs.y[i], do_s1[z].y[i]));
      if (do_z[z].a[i] != obs.a[i])
        flag(describe_row(i, "A under matching do(Z=z)", obs.a[i], do_z[z].a[i]));
      if (do_z[z].y[i] != obs.y[i])
        flag(describe_row(i, "Y under matching do(Z=z)", obs.y[i], do_z[z].y[i]));
    }
    if (copy_a)
      for (int z = 0; z < 2; ++z)
        if (do_z[z].a[i] != z) flag(describe_row(i, "deterministic copy A under do(Z=z)", z, do_z[z].a[i]));
  }
  return rep;
}

}  // namespace transportlab
