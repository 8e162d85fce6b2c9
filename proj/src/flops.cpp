#include "gpcn/flops.hpp"

namespace gpcn {

std::uint64_t flops_gcn_layer(std::uint64_t n, std::uint64_t f, std::uint64_t c, std::uint64_t nnz) {
  return n * f * (nnz + c);
}

std::uint64_t flops_dense(std::uint64_t n, std::uint64_t f, std::uint64_t c) { return n * f * c; }

std::uint64_t flops_project(std::uint64_t n, std::uint64_t m, std::uint64_t k) { return n * m * k; }

void FlopsLedger::add(FlopsCategory category, std::uint64_t flops) {
  by_category_[static_cast<int>(category)] += flops;
  total_ += flops;
}

void FlopsLedger::add(const FlopsLedger& other, std::uint64_t multiplier) {
  for (int c = 0; c < 3; ++c) add(static_cast<FlopsCategory>(c), other.by_category_[c] * multiplier);
}

const char* to_string(FlopsCategory c) {
  switch (c) {
    case FlopsCategory::gcn_layer:
      return "gcn_layer";
    case FlopsCategory::dense:
      return "dense";
    case FlopsCategory::projection:
      return "projection";
  }
  return "unknown";
}

}  // namespace gpcn
