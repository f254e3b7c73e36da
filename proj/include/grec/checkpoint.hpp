#pragma once

#include <stdexcept>
#include <string>

#include "grec/model.hpp"

namespace grec {

inline constexpr char kCheckpointMagic[8] = {'G', 'R', 'E', 'C', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Layout: magic, u32 version, u32 config byte count + ModelConfig text,
// u32 record count, then per record u32 name length + name, u32 rank,
// u64 extents, little-endian f32 values.
void save_checkpoint(const Model<float>& model, const std::string& path);

// Rebuilds the model from the stored config and validates every record
// against the shapes that config implies.
Model<float> load_checkpoint(const std::string& path);

}  // namespace grec
