// Copyright 2026 The sepstereo authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepstereo/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace sepstereo {

namespace {

// Little-endian scalar writers. The on-disk format is LE by contract; on a
// BE host these would need byte swaps, which we do not support.
template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw std::runtime_error("wav: truncated file");
  return v;
}

void expect_tag(std::istream& is, const char* tag) {
  char buf[4];
  is.read(buf, 4);
  if (!is || std::memcmp(buf, tag, 4) != 0)
    throw std::runtime_error(std::string("wav: missing '") + tag + "' chunk");
}

}  // namespace

void AudioClip::validate() const {
  if (channels.empty() || channels.size() > 2)
    throw std::invalid_argument("audio clip must have 1 or 2 channels");
  for (const auto& ch : channels)
    if (ch.size() != channels[0].size())
      throw std::invalid_argument("audio channels differ in length");
}

void clamp_unit(AudioClip& clip) {
  for (auto& ch : clip.channels)
    for (float& s : ch) s = std::clamp(s, -1.0f, 1.0f);
}

AudioClip read_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("wav: cannot open " + path);
  expect_tag(is, "RIFF");
  get<std::uint32_t>(is);
  expect_tag(is, "WAVE");

  std::uint16_t format = 0, num_channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;

  while (true) {
    char tag[4];
    is.read(tag, 4);
    if (!is) throw std::runtime_error("wav: no data chunk in " + path);
    const std::uint32_t size = get<std::uint32_t>(is);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      format = get<std::uint16_t>(is);
      num_channels = get<std::uint16_t>(is);
      rate = get<std::uint32_t>(is);
      get<std::uint32_t>(is);  // byte rate
      get<std::uint16_t>(is);  // block align
      bits = get<std::uint16_t>(is);
      if (size > 16) is.seekg(size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (!have_fmt) throw std::runtime_error("wav: data before fmt in " + path);
      if (num_channels < 1 || num_channels > 2)
        throw std::runtime_error("wav: unsupported channel count in " + path);
      const bool pcm16 = format == 1 && bits == 16;
      const bool f32 = format == 3 && bits == 32;
      if (!pcm16 && !f32)
        throw std::runtime_error("wav: unsupported sample format in " + path);
      const std::uint32_t bytes_per = bits / 8;
      const std::uint64_t frames = size / (bytes_per * num_channels);
      AudioClip clip;
      clip.sample_rate = static_cast<int>(rate);
      clip.channels.assign(num_channels, std::vector<float>(frames));
      std::vector<char> raw(size);
      is.read(raw.data(), size);
      if (!is) throw std::runtime_error("wav: truncated data in " + path);
      for (std::uint64_t f = 0; f < frames; ++f)
        for (int c = 0; c < num_channels; ++c) {
          const char* p = raw.data() + (f * num_channels + c) * bytes_per;
          if (pcm16) {
            std::int16_t v;
            std::memcpy(&v, p, 2);
            clip.channels[c][f] = static_cast<float>(v) / 32768.0f;
          } else {
            float v;
            std::memcpy(&v, p, 4);
            clip.channels[c][f] = v;
          }
        }
      clip.validate();
      return clip;
    } else {
      is.seekg(size + (size & 1), std::ios::cur);  // chunks are word-aligned
    }
  }
}

void write_wav(const std::string& path, const AudioClip& clip, bool as_float32) {
  clip.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("wav: cannot write " + path);

  const int nch = clip.num_channels();
  const std::uint32_t frames = static_cast<std::uint32_t>(clip.num_samples());
  const std::uint16_t bits = as_float32 ? 32 : 16;
  const std::uint32_t bytes_per = bits / 8;
  const std::uint32_t data_size = frames * nch * bytes_per;
  const std::uint32_t fact_size = as_float32 ? 12 : 0;

  os.write("RIFF", 4);
  put<std::uint32_t>(os, 4 + 24 + fact_size + 8 + data_size);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  put<std::uint32_t>(os, 16);
  put<std::uint16_t>(os, as_float32 ? 3 : 1);
  put<std::uint16_t>(os, static_cast<std::uint16_t>(nch));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(clip.sample_rate));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(clip.sample_rate) * nch * bytes_per);
  put<std::uint16_t>(os, static_cast<std::uint16_t>(nch * bytes_per));
  put<std::uint16_t>(os, bits);
  if (as_float32) {
    os.write("fact", 4);
    put<std::uint32_t>(os, 4);
    put<std::uint32_t>(os, frames);
  }
  os.write("data", 4);
  put<std::uint32_t>(os, data_size);
  for (std::uint32_t f = 0; f < frames; ++f)
    for (int c = 0; c < nch; ++c) {
      const float v = clip.channels[c][f];
      if (as_float32) {
        put<float>(os, v);
      } else {
        const float scaled = std::clamp(v, -1.0f, 1.0f) * 32767.0f;
        put<std::int16_t>(os, static_cast<std::int16_t>(std::lrintf(scaled)));
      }
    }
  if (!os) throw std::runtime_error("wav: write failed for " + path);
}

}  // namespace sepstereo
