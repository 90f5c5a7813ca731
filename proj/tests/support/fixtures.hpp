#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>
#include <cmath>

#include "frontier/simulate.hpp"

namespace fixtures {

using frontier::CovariateGenerator;
using frontier::DgpSpec;
using frontier::Family;

// ln kWh = 8 + 0.25 wfpr - 0.10 own_ac + v + u
inline DgpSpec nhn_dgp(std::size_t n, std::uint64_t seed, double sigma_u = 0.5, double sigma_v = 0.3) {
  DgpSpec d;
  d.family = Family::NHN;
  d.n = n;
  d.seed = seed;
  d.beta = {8.0, 0.25, -0.10};
  d.sigma_v = sigma_v;
  d.sigma_u = sigma_u;
  d.frontier = {CovariateGenerator::uniform("wfpr", 0.0, 1.0), CovariateGenerator::bernoulli("own_ac", 0.4)};
  return d;
}

// ln sigma_ui^2 = -1.6 + 0.5 hrs_tv
inline DgpSpec het_dgp(std::size_t n, std::uint64_t seed) {
  DgpSpec d = nhn_dgp(n, seed);
  d.family = Family::NHN_HET;
  d.delta = {-1.6, 0.5};
  d.ineff = {CovariateGenerator::uniform("hrs_tv", 0.0, 2.0)};
  return d;
}

// mu_i = 0.2 + 0.3 hrs_tv, sigma_u = 0.3
inline DgpSpec tn_dgp(std::size_t n, std::uint64_t seed) {
  DgpSpec d = nhn_dgp(n, seed, 0.3);
  d.family = Family::TN;
  d.delta = {0.2, 0.3};
  d.ineff = {CovariateGenerator::uniform("hrs_tv", 0.0, 2.0)};
  return d;
}

inline DgpSpec dgp_for(Family f, std::size_t n, std::uint64_t seed) {
  switch (f) {
    case Family::NHN_HET: return het_dgp(n, seed);
    case Family::TN: return tn_dgp(n, seed);
    case Family::OLS: {
      DgpSpec d = nhn_dgp(n, seed);
      d.family = Family::OLS;
      return d;
    }
    default: return nhn_dgp(n, seed);
  }
}

// Fresh, empty directory under the system temp path.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("frontier_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace fixtures

namespace fixtures {

// Households whose only varying fields are ln kWh = y and wfpr = x.
inline frontier::Dataset dataset_from(const std::vector<double>& y, const std::vector<double>& wfpr) {
  std::vector<frontier::HouseholdRecord> recs;
  for (std::size_t i = 0; i < y.size(); ++i) {
    frontier::HouseholdRecord r;
    r.id = "h" + std::to_string(i);
    r.annual_kwh = std::exp(y[i]);
    r.wfpr = wfpr[i];
    r.hh_size = 4;
    r.avg_hh_age = 30.0;
    r.income_quartile = 1 + static_cast<int>(i % 4);
    recs.push_back(r);
  }
  return frontier::Dataset("manual", std::move(recs));
}

}  // namespace fixtures
