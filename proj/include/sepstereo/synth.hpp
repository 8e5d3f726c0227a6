// Copyright 2026 The sepstereo authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sepstereo/audio.hpp"
#include "sepstereo/learning.hpp"
#include "sepstereo/tensor.hpp"

namespace sepstereo {

// Deterministic synthetic scenes: colored rectangles on black frames, each
// bound to a panned tone. Stands in for recorded datasets at desk scale.

enum class Timbre { Sine, Harmonic, Chirp, BandNoise };

const char* timbre_name(Timbre t);
Timbre timbre_from_name(const std::string& name);

struct SourceSpec {
  float x = 0.5f;  // 0 = far left, 1 = far right
  float y = 0.5f;
  Timbre timbre = Timbre::Sine;
  float f0 = 440.0f;
  float amplitude = 1.0f;  // (0, 1]
};

struct Scene {
  std::vector<SourceSpec> sources;  // up to 3
  float duration_s = 2.0f;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RenderOptions {
  int sample_rate = 16000;
  int frame_height = 32;
  int frame_width = 64;
  int frames_per_clip = 2;  // scenes are static, frames identical
};

// Constant-power pan: g_l = cos(x*pi/2), g_r = sin(x*pi/2).
std::array<float, 2> pan_gains(float x);
// Interaural delay of the far ear in samples, up to +-16.
int itd_delay_samples(float x);

Tensor render_visual(const Scene& scene, const RenderOptions& opt);

struct RenderedAudio {
  AudioClip stereo;
  AudioClip mono;  // per-sample average of the two channels
  std::vector<std::vector<float>> solos;  // per-source mono contributions
};

RenderedAudio render_binaural(const Scene& scene, const RenderOptions& opt);

struct RenderedScene {
  Scene scene;
  Tensor frames;
  RenderedAudio audio;
};

RenderedScene render_scene(const Scene& scene, const RenderOptions& opt);

// ------------------------------------------------------------ random scenes

struct SceneDistribution {
  int min_sources = 1;
  int max_sources = 1;
  float f0_lo = 220.0f;
  float f0_hi = 1760.0f;
  float x_lo = 0.0f;
  float x_hi = 1.0f;
  float duration_s = 2.0f;
};

Scene random_scene(const SceneDistribution& dist, SplitMix64& rng);

// ---------------------------------------------------------------- datasets

// On-disk layout per scene directory:
//   scene_%04d/{mono.wav, stereo.wav, solo_%d.wav, frame_%03d.ppm, scene.txt}
void write_scene_dir(const std::string& dir, const RenderedScene& rs,
                     const RenderOptions& opt);

struct LoadedScene {
  Tensor frames;
  AudioClip mono;
  AudioClip stereo;
  std::vector<std::vector<float>> solos;
};

LoadedScene load_scene_dir(const std::string& dir);
std::vector<std::string> list_scene_dirs(const std::string& data_dir);

struct SynthDataset {
  std::vector<LoadedScene> scenes;
};

SynthDataset load_dataset(const std::string& data_dir);

void generate_dataset(const std::string& out_dir, int n_scenes,
                      std::uint64_t seed, const SceneDistribution& dist,
                      const RenderOptions& opt);

// ---------------------------------------------------------------- sampling

// Random 0.63 s crop of a random scene (63 * hop samples), jointly
// amplitude-augmented and clipped to [-1, 1].
StereoBatchItem sample_stereo_item(const SynthDataset& data,
                                   const TrainConfig& cfg,
                                   const StftConfig& stft_cfg, SplitMix64& rng);

// Two distinct scenes, independently augmented crops of their mono tracks.
SepBatchItem sample_sep_pair(const SynthDataset& data, const TrainConfig& cfg,
                             const StftConfig& stft_cfg, SplitMix64& rng);

// --------------------------------------------------------------- image I/O

// Binary P6, 8-bit, maxval 255.
void write_ppm(const std::string& path, const Tensor& frame);
Tensor read_ppm(const std::string& path);
// Frames of one clip: frame_%03d.ppm under `dir`, stacked to [T,3,H,W].
Tensor read_frames_dir(const std::string& dir);

}  // namespace sepstereo
