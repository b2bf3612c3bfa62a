// Copyright 2026 The Intentune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "intentune/study.hpp"

namespace intentune::optimize {
namespace {

// Continuous domain a numeric parameter is sampled in.
struct Domain {
  double lo;
  double hi;
};

Domain domain_of(const ParamSpec& spec) {
  double lo = spec.lo;
  double hi = spec.hi;
  if (spec.kind == ParamKind::kInt) {
    lo -= 0.5;
    hi += 0.5;
  }
  if (spec.log) return {std::log(lo), std::log(hi)};
  return {lo, hi};
}

double to_internal(const ParamSpec& spec, const ParamValue& v) {
  const double x = as_double(v);
  return spec.log ? std::log(x) : x;
}

ParamValue from_internal(const ParamSpec& spec, double x) {
  double v = spec.log ? std::exp(x) : x;
  if (spec.kind == ParamKind::kInt) {
    const auto i = std::clamp(static_cast<std::int64_t>(std::llround(v)),
                              static_cast<std::int64_t>(spec.lo),
                              static_cast<std::int64_t>(spec.hi));
    return i;
  }
  return std::clamp(v, spec.lo, spec.hi);
}

ParamValue draw_random(const ParamSpec& spec, std::mt19937_64& rng) {
  if (spec.kind == ParamKind::kCategorical) {
    std::uniform_int_distribution<std::size_t> pick(0, spec.choices.size() - 1);
    return spec.choices[pick(rng)];
  }
  if (spec.kind == ParamKind::kInt && spec.lo == spec.hi) {
    return static_cast<std::int64_t>(spec.lo);
  }
  const Domain d = domain_of(spec);
  std::uniform_real_distribution<double> u(d.lo, d.hi);
  return from_internal(spec, u(rng));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double log_sum_exp(const std::vector<double>& xs) {
  const double m = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

// Equal-weight mixture of Gaussians truncated to the domain. One kernel per
// observation uses Scott's bandwidth, floored at floor_frac * range and at
// range / min(100, n + 1); one prior kernel sits at the domain centre with
// width hi - lo. Without the prior and the clip, repeated good observations
// shrink the density to a spike and the search stalls.
class TruncatedKde {
 public:
  TruncatedKde(const std::vector<double>& centers, Domain domain, double floor_frac,
               std::size_t n_observed)
      : domain_(domain) {
    const double m = static_cast<double>(centers.size());
    double mean = 0.0;
    for (double c : centers) mean += c;
    mean /= m;
    double var = 0.0;
    for (double c : centers) var += (c - mean) * (c - mean);
    const double sigma = centers.size() > 1 ? std::sqrt(var / (m - 1.0)) : 0.0;
    const double width = domain_.hi - domain_.lo;
    const double clip = width / std::min(100.0, static_cast<double>(n_observed) + 1.0);
    const double bandwidth =
        std::max({sigma * std::pow(m, -0.2), floor_frac * width, clip});
    for (double c : centers) add_kernel(c, bandwidth);
    add_kernel(0.5 * (domain_.lo + domain_.hi), width);
  }

  double sample(std::mt19937_64& rng) const {
    std::uniform_int_distribution<std::size_t> pick(0, kernels_.size() - 1);
    std::normal_distribution<double> noise(0.0, 1.0);
    const Kernel& k = kernels_[pick(rng)];
    for (int attempt = 0; attempt < 100; ++attempt) {
      const double x = k.center + k.bandwidth * noise(rng);
      if (x >= domain_.lo && x <= domain_.hi) return x;
    }
    return std::clamp(k.center, domain_.lo, domain_.hi);
  }

  double log_pdf(double x) const {
    static const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
    std::vector<double> terms;
    terms.reserve(kernels_.size());
    for (const Kernel& k : kernels_) {
      const double z = (x - k.center) / k.bandwidth;
      terms.push_back(-0.5 * z * z - kLogSqrt2Pi - std::log(k.bandwidth) - k.log_mass);
    }
    return log_sum_exp(terms) - std::log(static_cast<double>(kernels_.size()));
  }

 private:
  struct Kernel {
    double center;
    double bandwidth;
    double log_mass;  // log of the kernel's probability mass inside the domain
  };

  void add_kernel(double center, double bandwidth) {
    const double mass = normal_cdf((domain_.hi - center) / bandwidth) -
                        normal_cdf((domain_.lo - center) / bandwidth);
    kernels_.push_back({center, bandwidth, std::log(std::max(mass, 1e-300))});
  }

  Domain domain_;
  std::vector<Kernel> kernels_;
};

struct Observation {
  double value;
  const ParamValue* param;
};

ParamValue sample_numeric(const ParamSpec& spec, const std::vector<Observation>& good,
                          const std::vector<Observation>& bad, std::mt19937_64& rng,
                          const TpeOptions& options) {
  const Domain d = domain_of(spec);
  auto centers = [&](const std::vector<Observation>& obs) {
    std::vector<double> c;
    c.reserve(obs.size());
    for (const auto& o : obs) c.push_back(to_internal(spec, *o.param));
    return c;
  };
  const std::size_t n = good.size() + bad.size();
  const TruncatedKde l(centers(good), d, options.bandwidth_floor, n);
  const TruncatedKde g(centers(bad), d, options.bandwidth_floor, n);
  double best_x = 0.0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < options.n_candidates; ++i) {
    const double x = l.sample(rng);
    const double score = l.log_pdf(x) - g.log_pdf(x);
    if (i == 0 || score > best_score) {
      best_score = score;
      best_x = x;
    }
  }
  return from_internal(spec, best_x);
}

ParamValue sample_categorical(const ParamSpec& spec,
                              const std::vector<Observation>& good,
                              const std::vector<Observation>& bad,
                              std::mt19937_64& rng, const TpeOptions& options) {
  const std::size_t k = spec.choices.size();
  auto smoothed = [&](const std::vector<Observation>& obs) {
    std::vector<double> p(k, 1.0);
    for (const auto& o : obs) {
      const auto it = std::find(spec.choices.begin(), spec.choices.end(), *o.param);
      if (it != spec.choices.end()) p[it - spec.choices.begin()] += 1.0;
    }
    const double total = static_cast<double>(obs.size() + k);
    for (double& v : p) v /= total;
    return p;
  };
  const auto l = smoothed(good);
  const auto g = smoothed(bad);
  std::discrete_distribution<std::size_t> draw(l.begin(), l.end());
  std::size_t best = 0;
  double best_ratio = -1.0;
  for (std::size_t i = 0; i < options.n_candidates; ++i) {
    const std::size_t c = draw(rng);
    const double ratio = l[c] / g[c];
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = c;
    }
  }
  return spec.choices[best];
}

}  // namespace

std::string_view to_string(SamplerKind kind) {
  return kind == SamplerKind::kRandom ? "random" : "tpe";
}

SamplerKind sampler_kind_from_string(std::string_view name) {
  if (name == "random") return SamplerKind::kRandom;
  if (name == "tpe") return SamplerKind::kTpe;
  throw InvalidArgument("unknown sampler '" + std::string(name) + "'");
}

Params sample_random(const ParamSpace& space, std::mt19937_64& rng) {
  Params params;
  for (const auto& spec : space) {
    if (!is_active(spec, params)) continue;
    params[spec.name] = draw_random(spec, rng);
  }
  return params;
}

Params sample_tpe(const ParamSpace& space, std::span<const Trial> trials,
                  std::mt19937_64& rng, const TpeOptions& options) {
  std::vector<const Trial*> complete;
  for (const auto& t : trials) {
    if (t.state == TrialState::kComplete) complete.push_back(&t);
  }
  if (complete.size() < options.n_startup) return sample_random(space, rng);

  // Highest value first; stable so equal values keep trial order.
  std::stable_sort(complete.begin(), complete.end(),
                   [](const Trial* a, const Trial* b) { return a->value > b->value; });

  Params params;
  for (const auto& spec : space) {
    if (!is_active(spec, params)) continue;
    std::vector<Observation> obs;
    for (const Trial* t : complete) {
      const auto it = t->params.find(spec.name);
      if (it != t->params.end()) obs.push_back({t->value, &it->second});
    }
    const auto n_good = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(options.gamma * static_cast<double>(obs.size()))));
    if (obs.size() <= n_good ||
        (spec.kind == ParamKind::kInt && spec.lo == spec.hi)) {
      params[spec.name] = draw_random(spec, rng);
      continue;
    }
    const std::vector<Observation> good(obs.begin(), obs.begin() + n_good);
    const std::vector<Observation> bad(obs.begin() + n_good, obs.end());
    params[spec.name] = spec.kind == ParamKind::kCategorical
                            ? sample_categorical(spec, good, bad, rng, options)
                            : sample_numeric(spec, good, bad, rng, options);
  }
  return params;
}

}  // namespace intentune::optimize
