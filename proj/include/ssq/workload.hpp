#pragma once

// Seeded random relations and queries, each run end to end (share, query,
// reconstruct) and compared with the plaintext oracle.

#include <cstdint>
#include <string>
#include <vector>

#include "ssq/coordinator.hpp"
#include "ssq/owner.hpp"

namespace ssq {

struct Workload {
  uint64_t seed = 0;
  std::vector<Relation> relations;
  QueryPlan plan;
  OwnerOptions owner;
  CoordinatorOptions coordinator;
  int extra_servers = 0;  // servers beyond the minimum

  std::string describe() const;
};

struct WorkloadLimits {
  size_t max_rows = 500;
  size_t max_attributes = 6;
};

// Workload `index` of the sweep keyed by `seed`. Plan kinds rotate with the
// index so every template is covered.
Workload random_workload(uint64_t seed, size_t index, const WorkloadLimits& limits = {});

struct WorkloadOutcome {
  bool match = false;
  bool bounds_pass = false;
  int servers = 0;
  QueryResult secure;
  QueryResult expected;
  CostLedger ledger;
};

WorkloadOutcome run_workload(const Workload& w, KernelMode mode = KernelMode::kParallel);

}  // namespace ssq
