#pragma once

#include "aknet/numerics/matrix.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace aknet {

// Flat parameter vector with named matrix-shaped views.
class ParamStore {
 public:
  struct Block {
    std::string name;
    Index rows = 0;
    Index cols = 0;
    std::size_t offset = 0;

    std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
    bool operator==(const Block&) const = default;
  };

  using MatrixView = Eigen::Map<Matrix>;
  using ConstMatrixView = Eigen::Map<const Matrix>;

  std::size_t add_block(std::string name, Index rows, Index cols);

  MatrixView view(std::size_t block);
  ConstMatrixView view(std::size_t block) const;

  std::optional<std::size_t> find(const std::string& name) const;
  std::size_t index_of(const std::string& name) const;

  const std::vector<Block>& blocks() const { return blocks_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  // Number of trainable scalars in blocks whose name starts with `prefix`.
  std::size_t count_with_prefix(const std::string& prefix) const;

  bool operator==(const ParamStore& other) const = default;

 private:
  std::vector<Block> blocks_;
  std::vector<double> values_;
};

}  // namespace aknet
