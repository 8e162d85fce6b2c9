#pragma once

#include <array>
#include <cstdint>

namespace gpcn {

enum class FlopsCategory { gcn_layer = 0, dense = 1, projection = 2 };

// Cost model for the layers of the ensembles:
//   graph convolution with n x n structure matrix Z, n x F input, F x C filter: nF(|Z| + C)
//   node-wise dense layer: nFC
//   product of n x k and k x m matrices: nmk
std::uint64_t flops_gcn_layer(std::uint64_t n, std::uint64_t f, std::uint64_t c, std::uint64_t nnz);
std::uint64_t flops_dense(std::uint64_t n, std::uint64_t f, std::uint64_t c);
std::uint64_t flops_project(std::uint64_t n, std::uint64_t m, std::uint64_t k);

// Cumulative, additive operation counter with a per-category breakdown.
class FlopsLedger {
 public:
  void add(FlopsCategory category, std::uint64_t flops);
  void add(const FlopsLedger& other, std::uint64_t multiplier = 1);

  std::uint64_t total() const { return total_; }
  std::uint64_t category(FlopsCategory c) const { return by_category_[static_cast<int>(c)]; }

 private:
  std::uint64_t total_ = 0;
  std::array<std::uint64_t, 3> by_category_{};
};

const char* to_string(FlopsCategory c);

}  // namespace gpcn
