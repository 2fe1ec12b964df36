#pragma once

#include "aknet/hypercm/hyper_net.hpp"
#include "aknet/kgain/gain_net.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

namespace aknet {

// Container: "AKCK" | u32 version | integer hyperparameters | real
// hyperparameters | block manifest (name, rows, cols) | f64 data, all little
// endian. Gain-network blocks live under "theta/", hypernetwork blocks under
// "psi/".
struct Checkpoint {
  std::map<std::string, std::int64_t> ints;
  std::map<std::string, double> reals;
  ParamStore params;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

Checkpoint make_checkpoint(const GainNet& gain_net, const HyperNet* hyper);

struct LoadedNets {
  GainNet gain_net;
  std::optional<HyperNet> hyper;
};

// Rebuilds the networks from the stored hyperparameters and copies the blocks
// by name. Throws FormatError if a block is missing or has the wrong shape.
LoadedNets unpack_checkpoint(const Checkpoint& ckpt);

void save_checkpoint(const std::filesystem::path& path, const GainNet& gain_net,
                     const HyperNet* hyper = nullptr);
LoadedNets load_checkpoint(const std::filesystem::path& path);

}  // namespace aknet
