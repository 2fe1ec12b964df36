#include "aknet/kgain/checkpoint.hpp"

#include "aknet/binary_io.hpp"
#include "aknet/errors.hpp"

#include <fstream>

namespace aknet {

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

void copy_blocks(const ParamStore& from, ParamStore& to, const std::string& prefix) {
  for (std::size_t i = 0; i < to.blocks().size(); ++i) {
    const auto& dst = to.blocks()[i];
    if (dst.name.rfind(prefix, 0) != 0) continue;
    const auto src = from.find(dst.name);
    if (!src) throw FormatError("checkpoint is missing block '" + dst.name + "'");
    const auto& b = from.blocks()[*src];
    if (b.rows != dst.rows || b.cols != dst.cols) {
      throw FormatError("checkpoint block '" + dst.name + "' has shape " +
                        std::to_string(b.rows) + "x" + std::to_string(b.cols) + ", expected " +
                        std::to_string(dst.rows) + "x" + std::to_string(dst.cols));
    }
    to.view(i) = from.view(*src);
  }
}

std::int64_t need_int(const Checkpoint& c, const std::string& key) {
  auto it = c.ints.find(key);
  if (it == c.ints.end()) throw FormatError("checkpoint lacks hyperparameter '" + key + "'");
  return it->second;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  binary::write_magic(out, "AKCK");
  binary::write<std::uint32_t>(out, kCheckpointVersion);
  binary::write<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.ints.size()));
  for (const auto& [k, v] : ckpt.ints) {
    binary::write_string(out, k);
    binary::write<std::int64_t>(out, v);
  }
  binary::write<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.reals.size()));
  for (const auto& [k, v] : ckpt.reals) {
    binary::write_string(out, k);
    binary::write<double>(out, v);
  }
  const auto& blocks = ckpt.params.blocks();
  binary::write<std::uint32_t>(out, static_cast<std::uint32_t>(blocks.size()));
  for (const auto& b : blocks) {
    binary::write_string(out, b.name);
    binary::write<std::uint64_t>(out, static_cast<std::uint64_t>(b.rows));
    binary::write<std::uint64_t>(out, static_cast<std::uint64_t>(b.cols));
  }
  for (double v : ckpt.params.values()) binary::write<double>(out, v);
}

Checkpoint read_checkpoint(std::istream& in) {
  binary::expect_magic(in, "AKCK", "checkpoint");
  const auto version = binary::read<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  const auto n_int = binary::read<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n_int; ++i) {
    std::string k = binary::read_string(in);
    c.ints[k] = binary::read<std::int64_t>(in);
  }
  const auto n_real = binary::read<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n_real; ++i) {
    std::string k = binary::read_string(in);
    c.reals[k] = binary::read<double>(in);
  }
  const auto n_blocks = binary::read<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n_blocks; ++i) {
    std::string name = binary::read_string(in);
    const auto rows = binary::read<std::uint64_t>(in);
    const auto cols = binary::read<std::uint64_t>(in);
    if (rows == 0 || cols == 0 || rows > (1u << 24) || cols > (1u << 24)) {
      throw FormatError("checkpoint block '" + name + "' has an invalid shape");
    }
    if (c.params.find(name)) throw FormatError("duplicate checkpoint block '" + name + "'");
    c.params.add_block(std::move(name), static_cast<Index>(rows), static_cast<Index>(cols));
  }
  for (double& v : c.params.values()) v = binary::read<double>(in);
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes in checkpoint");
  return c;
}

Checkpoint make_checkpoint(const GainNet& gain_net, const HyperNet* hyper) {
  Checkpoint c;
  const auto& cfg = gain_net.config();
  c.ints["m"] = cfg.state_dim;
  c.ints["n"] = cfg.obs_dim;
  c.ints["h"] = cfg.hidden;
  c.ints["norm"] = static_cast<std::int64_t>(cfg.norm);
  c.reals["rms_decay"] = cfg.rms_decay;
  auto add_all = [&](const ParamStore& p) {
    for (std::size_t i = 0; i < p.blocks().size(); ++i) {
      const auto& b = p.blocks()[i];
      const std::size_t k = c.params.add_block(b.name, b.rows, b.cols);
      c.params.view(k) = p.view(i);
    }
  };
  add_all(gain_net.params());
  if (hyper != nullptr) {
    c.ints["h1"] = hyper->config().hidden;
    add_all(hyper->params());
  }
  return c;
}

LoadedNets unpack_checkpoint(const Checkpoint& ckpt) {
  GainNetConfig cfg;
  cfg.state_dim = need_int(ckpt, "m");
  cfg.obs_dim = need_int(ckpt, "n");
  cfg.hidden = need_int(ckpt, "h");
  const auto norm = need_int(ckpt, "norm");
  if (norm < 0 || norm > 1) throw FormatError("checkpoint has unknown feature norm");
  cfg.norm = static_cast<FeatureNorm>(norm);
  if (auto it = ckpt.reals.find("rms_decay"); it != ckpt.reals.end()) cfg.rms_decay = it->second;
  try {
    cfg.validate();
  } catch (const ContractViolation& e) {
    throw FormatError(std::string("checkpoint hyperparameters: ") + e.what());
  }
  LoadedNets out{GainNet(cfg), std::nullopt};
  copy_blocks(ckpt.params, out.gain_net.params(), "theta/");
  if (ckpt.ints.count("h1") != 0) {
    HyperNet hyper(HyperNetConfig{need_int(ckpt, "h1"), out.gain_net.cm_width()});
    copy_blocks(ckpt.params, hyper.params(), "psi/");
    out.hyper = std::move(hyper);
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const GainNet& gain_net,
                     const HyperNet* hyper) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  write_checkpoint(out, make_checkpoint(gain_net, hyper));
}

LoadedNets load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  return unpack_checkpoint(read_checkpoint(in));
}

}  // namespace aknet
