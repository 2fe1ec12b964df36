#include "aknet/numerics/param_store.hpp"

#include "aknet/errors.hpp"

namespace aknet {

std::size_t ParamStore::add_block(std::string name, Index rows, Index cols) {
  if (rows <= 0 || cols <= 0) throw ContractViolation("param block '" + name + "' has empty shape");
  if (find(name)) throw ContractViolation("duplicate param block '" + name + "'");
  Block block{std::move(name), rows, cols, values_.size()};
  values_.resize(values_.size() + block.size(), 0.0);
  blocks_.push_back(std::move(block));
  return blocks_.size() - 1;
}

ParamStore::MatrixView ParamStore::view(std::size_t block) {
  const Block& b = blocks_.at(block);
  return MatrixView(values_.data() + b.offset, b.rows, b.cols);
}

ParamStore::ConstMatrixView ParamStore::view(std::size_t block) const {
  const Block& b = blocks_.at(block);
  return ConstMatrixView(values_.data() + b.offset, b.rows, b.cols);
}

std::optional<std::size_t> ParamStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t ParamStore::index_of(const std::string& name) const {
  auto idx = find(name);
  if (!idx) throw ContractViolation("unknown param block '" + name + "'");
  return *idx;
}

std::size_t ParamStore::count_with_prefix(const std::string& prefix) const {
  std::size_t total = 0;
  for (const auto& b : blocks_) {
    if (b.name.starts_with(prefix)) total += b.size();
  }
  return total;
}

}  // namespace aknet
