#include "aknet/ssm/dataset_io.hpp"

#include "aknet/binary_io.hpp"

#include <fstream>
#include <iomanip>

namespace aknet {

namespace {

constexpr std::uint32_t kDatasetVersion = 1;
constexpr std::uint32_t kModelVersion = 1;

void write_values(std::ostream& out, const double* data, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) binary::write<double>(out, data[i]);
}

void read_values(std::istream& in, double* data, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) data[i] = binary::read<double>(in);
}

}  // namespace

void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  dataset.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  const auto m = static_cast<std::uint64_t>(dataset.state_dim());
  const auto n = static_cast<std::uint64_t>(dataset.obs_dim());
  const auto len = static_cast<std::uint64_t>(dataset.length());
  binary::write_magic(out, "AKDS");
  binary::write<std::uint32_t>(out, kDatasetVersion);
  binary::write<std::uint64_t>(out, m);
  binary::write<std::uint64_t>(out, n);
  binary::write<std::uint64_t>(out, len);
  binary::write<std::uint64_t>(out, dataset.size());
  binary::write<std::uint8_t>(out, static_cast<std::uint8_t>(dataset.family));
  binary::write<std::uint8_t>(out, static_cast<std::uint8_t>(dataset.split));
  for (const auto& tr : dataset.trajectories) {
    write_values(out, tr.x0.data(), m);
    write_values(out, tr.states.data(), len * m);
    write_values(out, tr.observations.data(), len * n);
    write_values(out, tr.sow.data(), len);
    write_values(out, tr.q2.data(), len);
    write_values(out, tr.r2.data(), len);
  }
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  binary::expect_magic(in, "AKDS", "dataset");
  const auto version = binary::read<std::uint32_t>(in);
  if (version != kDatasetVersion) {
    throw FormatError("unsupported dataset version " + std::to_string(version));
  }
  const auto m = binary::read<std::uint64_t>(in);
  const auto n = binary::read<std::uint64_t>(in);
  const auto len = binary::read<std::uint64_t>(in);
  const auto count = binary::read<std::uint64_t>(in);
  const auto family = binary::read<std::uint8_t>(in);
  const auto split = binary::read<std::uint8_t>(in);
  if (family > 1 || split > 1) throw FormatError("corrupt dataset header");
  if (m == 0 || n == 0 || len == 0 || count == 0) throw FormatError("empty dataset header");

  Dataset ds;
  ds.family = static_cast<NoiseFamily>(family);
  ds.split = static_cast<SplitTag>(split);
  ds.trajectories.resize(count);
  const auto M = static_cast<Index>(m);
  const auto N = static_cast<Index>(n);
  const auto L = static_cast<Index>(len);
  for (auto& tr : ds.trajectories) {
    tr.x0.resize(M);
    tr.states.resize(L, M);
    tr.observations.resize(L, N);
    tr.sow.resize(len);
    tr.q2.resize(len);
    tr.r2.resize(len);
    read_values(in, tr.x0.data(), m);
    read_values(in, tr.states.data(), len * m);
    read_values(in, tr.observations.data(), len * n);
    read_values(in, tr.sow.data(), len);
    read_values(in, tr.q2.data(), len);
    read_values(in, tr.r2.data(), len);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes in dataset");
  ds.validate();
  return ds;
}

void export_dataset_csv(const std::filesystem::path& path, const Dataset& dataset) {
  dataset.validate();
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  const Index m = dataset.state_dim();
  const Index n = dataset.obs_dim();
  out << "trajectory,t";
  for (Index i = 0; i < m; ++i) out << ",x_" << i;
  for (Index j = 0; j < n; ++j) out << ",y_" << j;
  out << ",sow\n";
  out << std::setprecision(17);
  for (std::size_t k = 0; k < dataset.size(); ++k) {
    const auto& tr = dataset.trajectories[k];
    for (std::size_t t = 0; t < tr.length(); ++t) {
      const auto row = static_cast<Index>(t);
      out << k << ',' << t + 1;
      for (Index i = 0; i < m; ++i) out << ',' << tr.states(row, i);
      for (Index j = 0; j < n; ++j) out << ',' << tr.observations(row, j);
      out << ',' << tr.sow[t] << '\n';
    }
  }
}

void save_model(const std::filesystem::path& path, const SSModel& model) {
  model.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  binary::write_magic(out, "AKMD");
  binary::write<std::uint32_t>(out, kModelVersion);
  binary::write<std::uint64_t>(out, static_cast<std::uint64_t>(model.state_dim()));
  binary::write<std::uint64_t>(out, static_cast<std::uint64_t>(model.obs_dim()));
  for (const Matrix* a : {&model.F, &model.H, &model.Q0, &model.R0}) {
    write_values(out, a->data(), static_cast<std::size_t>(a->size()));
  }
}

SSModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  binary::expect_magic(in, "AKMD", "model");
  const auto version = binary::read<std::uint32_t>(in);
  if (version != kModelVersion) {
    throw FormatError("unsupported model version " + std::to_string(version));
  }
  const auto m = static_cast<Index>(binary::read<std::uint64_t>(in));
  const auto n = static_cast<Index>(binary::read<std::uint64_t>(in));
  if (m <= 0 || n <= 0 || m > 4096 || n > 4096) throw FormatError("corrupt model header");
  SSModel model{Matrix(m, m), Matrix(n, m), Matrix(m, m), Matrix(n, n)};
  for (Matrix* a : {&model.F, &model.H, &model.Q0, &model.R0}) {
    read_values(in, a->data(), static_cast<std::size_t>(a->size()));
  }
  try {
    model.validate();
  } catch (const ContractViolation& e) {
    throw FormatError(std::string("stored model is invalid: ") + e.what());
  }
  return model;
}

}  // namespace aknet
