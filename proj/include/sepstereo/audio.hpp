// Copyright 2026 The sepstereo authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sepstereo {

// One clip of 16 kHz audio, mono or stereo, samples in [-1, 1] once
// clamp_unit() has run. Channels always hold equal sample counts.
struct AudioClip {
  int sample_rate = 16000;
  std::vector<std::vector<float>> channels;

  int num_channels() const { return static_cast<int>(channels.size()); }
  std::int64_t num_samples() const {
    return channels.empty() ? 0 : static_cast<std::int64_t>(channels[0].size());
  }
  bool stereo() const { return channels.size() == 2; }
  void validate() const;
};

// Hard clip to [-1, 1].
void clamp_unit(AudioClip& clip);

// RIFF/WAVE, little-endian, PCM16 or IEEE float32, mono/stereo.
AudioClip read_wav(const std::string& path);
void write_wav(const std::string& path, const AudioClip& clip, bool as_float32 = true);

}  // namespace sepstereo
