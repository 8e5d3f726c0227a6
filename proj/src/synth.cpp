// Copyright 2026 The sepstereo authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepstereo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace sepstereo {

namespace fs = std::filesystem;

namespace {

constexpr int kMaxItdSamples = 16;

std::array<float, 3> timbre_color(Timbre t) {
  switch (t) {
    case Timbre::Sine: return {1.0f, 0.2f, 0.2f};
    case Timbre::Harmonic: return {0.2f, 1.0f, 0.2f};
    case Timbre::Chirp: return {0.2f, 0.2f, 1.0f};
    case Timbre::BandNoise: return {1.0f, 1.0f, 0.2f};
  }
  throw std::logic_error("unknown timbre");
}

std::vector<float> synth_source(const SourceSpec& src, float duration_s,
                                int sample_rate, SplitMix64& rng) {
  const std::int64_t n = static_cast<std::int64_t>(std::lround(duration_s * sample_rate));
  std::vector<float> out(static_cast<std::size_t>(n), 0.0f);
  const double two_pi = 2.0 * std::numbers::pi;
  const double dt = 1.0 / sample_rate;
  switch (src.timbre) {
    case Timbre::Sine: {
      const double phase0 = two_pi * rng.uniform();
      for (std::int64_t i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] =
            src.amplitude * static_cast<float>(std::sin(two_pi * src.f0 * i * dt + phase0));
      break;
    }
    case Timbre::Harmonic: {
      double norm = 0.0;
      for (int h = 1; h <= 4; ++h) norm += 1.0 / h;
      std::array<double, 4> phases{};
      for (auto& p : phases) p = two_pi * rng.uniform();
      for (std::int64_t i = 0; i < n; ++i) {
        double v = 0.0;
        for (int h = 1; h <= 4; ++h)
          v += std::sin(two_pi * src.f0 * h * i * dt + phases[static_cast<std::size_t>(h - 1)]) / h;
        out[static_cast<std::size_t>(i)] = src.amplitude * static_cast<float>(v / norm);
      }
      break;
    }
    case Timbre::Chirp: {
      // linear sweep f0 -> 2 f0 across the clip
      const double phase0 = two_pi * rng.uniform();
      const double rate = src.f0 / (duration_s > 0 ? duration_s : 1.0f);
      for (std::int64_t i = 0; i < n; ++i) {
        const double t = i * dt;
        out[static_cast<std::size_t>(i)] = src.amplitude *
            static_cast<float>(std::sin(phase0 + two_pi * (src.f0 * t + 0.5 * rate * t * t)));
      }
      break;
    }
    case Timbre::BandNoise: {
      // random-phase sinusoids inside a +-10% band around f0
      constexpr int kComponents = 32;
      std::array<double, kComponents> freqs{}, phases{};
      for (int j = 0; j < kComponents; ++j) {
        freqs[static_cast<std::size_t>(j)] = src.f0 * (0.9 + 0.2 * rng.uniform());
        phases[static_cast<std::size_t>(j)] = two_pi * rng.uniform();
      }
      const double gain = std::sqrt(2.0 / kComponents);
      for (std::int64_t i = 0; i < n; ++i) {
        double v = 0.0;
        for (int j = 0; j < kComponents; ++j)
          v += std::sin(two_pi * freqs[static_cast<std::size_t>(j)] * i * dt +
                        phases[static_cast<std::size_t>(j)]);
        out[static_cast<std::size_t>(i)] = src.amplitude * static_cast<float>(gain * v);
      }
      break;
    }
  }
  return out;
}

std::vector<float> delayed(const std::vector<float>& x, int delay) {
  std::vector<float> out(x.size(), 0.0f);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::int64_t j = static_cast<std::int64_t>(i) - delay;
    if (j >= 0 && j < static_cast<std::int64_t>(x.size()))
      out[i] = x[static_cast<std::size_t>(j)];
  }
  return out;
}

}  // namespace

const char* timbre_name(Timbre t) {
  switch (t) {
    case Timbre::Sine: return "sine";
    case Timbre::Harmonic: return "harmonic";
    case Timbre::Chirp: return "chirp";
    case Timbre::BandNoise: return "bandnoise";
  }
  throw std::logic_error("unknown timbre");
}

Timbre timbre_from_name(const std::string& name) {
  if (name == "sine") return Timbre::Sine;
  if (name == "harmonic") return Timbre::Harmonic;
  if (name == "chirp") return Timbre::Chirp;
  if (name == "bandnoise") return Timbre::BandNoise;
  throw std::invalid_argument("unknown timbre: " + name);
}

void Scene::validate() const {
  if (sources.size() > 3)
    throw std::invalid_argument("scene: at most 3 sources");
  for (const SourceSpec& s : sources) {
    if (s.x < 0.0f || s.x > 1.0f || s.y < 0.0f || s.y > 1.0f)
      throw std::invalid_argument("scene: source position outside unit square");
    if (s.amplitude <= 0.0f || s.amplitude > 1.0f)
      throw std::invalid_argument("scene: amplitude must be in (0, 1]");
    if (s.f0 <= 0.0f) throw std::invalid_argument("scene: f0 must be positive");
  }
  if (duration_s <= 0.0f) throw std::invalid_argument("scene: duration must be positive");
}

std::array<float, 2> pan_gains(float x) {
  const double a = static_cast<double>(x) * std::numbers::pi / 2.0;
  return {static_cast<float>(std::cos(a)), static_cast<float>(std::sin(a))};
}

int itd_delay_samples(float x) {
  return static_cast<int>(std::lround((x - 0.5) * 2.0 * kMaxItdSamples));
}

Tensor render_visual(const Scene& scene, const RenderOptions& opt) {
  const int t_frames = opt.frames_per_clip, h = opt.frame_height, w = opt.frame_width;
  Tensor frames = Tensor::zeros({t_frames, 3, h, w});
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  // one static frame, replicated
  std::vector<float> img(static_cast<std::size_t>(3 * plane), 0.0f);
  for (const SourceSpec& src : scene.sources) {
    const auto color = timbre_color(src.timbre);
    const int cx = static_cast<int>(std::lround(src.x * (w - 1)));
    const int cy = static_cast<int>(std::lround(src.y * (h - 1)));
    const int half_w = std::max(1, w / 16);
    const int half_h = std::max(1, h / 8);
    for (int y = std::max(0, cy - half_h); y <= std::min(h - 1, cy + half_h); ++y)
      for (int x = std::max(0, cx - half_w); x <= std::min(w - 1, cx + half_w); ++x)
        for (int c = 0; c < 3; ++c)
          img[static_cast<std::size_t>(c * plane + y * w + x)] =
              std::min(1.0f, color[static_cast<std::size_t>(c)] * src.amplitude);
  }
  for (int t = 0; t < t_frames; ++t)
    std::copy(img.begin(), img.end(),
              frames.data().data() + static_cast<std::int64_t>(t) * 3 * plane);
  return frames;
}

RenderedAudio render_binaural(const Scene& scene, const RenderOptions& opt) {
  scene.validate();
  SplitMix64 rng(scene.seed);
  const std::int64_t n =
      static_cast<std::int64_t>(std::lround(scene.duration_s * opt.sample_rate));
  std::vector<float> left(static_cast<std::size_t>(n), 0.0f);
  std::vector<float> right(static_cast<std::size_t>(n), 0.0f);
  std::vector<std::vector<float>> solos;

  for (const SourceSpec& src : scene.sources) {
    const std::vector<float> dry = synth_source(src, scene.duration_s, opt.sample_rate, rng);
    const auto [g_l, g_r] = pan_gains(src.x);
    const int d = itd_delay_samples(src.x);
    // positive delay = source right of center, left ear hears it late
    const std::vector<float> to_left = d > 0 ? delayed(dry, d) : dry;
    const std::vector<float> to_right = d < 0 ? delayed(dry, -d) : dry;
    std::vector<float> solo(dry.size());
    for (std::size_t i = 0; i < dry.size(); ++i) {
      const float l = g_l * to_left[i];
      const float r = g_r * to_right[i];
      left[i] += l;
      right[i] += r;
      solo[i] = 0.5f * (l + r);
    }
    solos.push_back(std::move(solo));
  }

  float peak = 0.0f;
  for (std::size_t i = 0; i < left.size(); ++i)
    peak = std::max({peak, std::abs(left[i]), std::abs(right[i])});
  const float norm = peak > 0.0f ? 0.9f / peak : 1.0f;
  for (auto* ch : {&left, &right})
    for (float& v : *ch) v *= norm;
  for (auto& solo : solos)
    for (float& v : solo) v *= norm;

  RenderedAudio out;
  out.stereo.sample_rate = opt.sample_rate;
  out.stereo.channels = {left, right};
  out.mono.sample_rate = opt.sample_rate;
  out.mono.channels = {mono_average(left, right)};
  out.solos = std::move(solos);
  clamp_unit(out.stereo);
  clamp_unit(out.mono);
  return out;
}

RenderedScene render_scene(const Scene& scene, const RenderOptions& opt) {
  return {scene, render_visual(scene, opt), render_binaural(scene, opt)};
}

Scene random_scene(const SceneDistribution& dist, SplitMix64& rng) {
  Scene scene;
  scene.seed = rng.next();
  scene.duration_s = dist.duration_s;
  const int span = dist.max_sources - dist.min_sources;
  const int n = dist.min_sources + (span > 0 ? static_cast<int>(rng.below(static_cast<std::uint64_t>(span + 1))) : 0);
  for (int i = 0; i < n; ++i) {
    SourceSpec src;
    src.x = rng.uniform(dist.x_lo, dist.x_hi);
    src.y = rng.uniform(0.2f, 0.8f);
    src.timbre = static_cast<Timbre>(rng.below(4));
    // log-uniform pitch
    const float lf = rng.uniform(std::log(dist.f0_lo), std::log(dist.f0_hi));
    src.f0 = std::exp(lf);
    src.amplitude = rng.uniform(0.5f, 1.0f);
    scene.sources.push_back(src);
  }
  scene.validate();
  return scene;
}

// ------------------------------------------------------------------- disk

void write_ppm(const std::string& path, const Tensor& frame) {
  if (frame.shape().size() != 3 || frame.dim(0) != 3)
    throw std::invalid_argument("write_ppm: expected [3,H,W]");
  const int h = frame.dim(1), w = frame.dim(2);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("ppm: cannot write " + path);
  os << "P6\n" << w << " " << h << "\n255\n";
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  for (std::int64_t i = 0; i < plane; ++i)
    for (int c = 0; c < 3; ++c) {
      const float v = std::clamp(frame.data()[static_cast<std::size_t>(c * plane + i)], 0.0f, 1.0f);
      os.put(static_cast<char>(std::lround(v * 255.0f)));
    }
  if (!os) throw std::runtime_error("ppm: write failed for " + path);
}

Tensor read_ppm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("ppm: cannot open " + path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  is >> magic >> w >> h >> maxval;
  if (magic != "P6" || maxval != 255 || w <= 0 || h <= 0)
    throw std::runtime_error("ppm: unsupported header in " + path);
  is.get();  // single whitespace after maxval
  std::vector<char> raw(static_cast<std::size_t>(3) * w * h);
  is.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!is) throw std::runtime_error("ppm: truncated " + path);
  Tensor frame = Tensor::zeros({3, h, w});
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  for (std::int64_t i = 0; i < plane; ++i)
    for (int c = 0; c < 3; ++c)
      frame.data()[static_cast<std::size_t>(c * plane + i)] =
          static_cast<float>(static_cast<unsigned char>(raw[static_cast<std::size_t>(3 * i + c)])) / 255.0f;
  return frame;
}

Tensor read_frames_dir(const std::string& dir) {
  std::vector<std::string> paths;
  char name[32];
  for (int t = 0;; ++t) {
    std::snprintf(name, sizeof(name), "frame_%03d.ppm", t);
    const fs::path p = fs::path(dir) / name;
    if (!fs::exists(p)) break;
    paths.push_back(p.string());
  }
  if (paths.empty()) throw std::runtime_error("frames: none found in " + dir);
  std::vector<Tensor> frames;
  frames.reserve(paths.size());
  for (const auto& p : paths) frames.push_back(read_ppm(p));
  const int h = frames[0].dim(1), w = frames[0].dim(2);
  Tensor out = Tensor::zeros({static_cast<int>(frames.size()), 3, h, w});
  const std::int64_t per = frames[0].numel();
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (frames[t].shape() != frames[0].shape())
      throw std::runtime_error("frames: inconsistent sizes in " + dir);
    std::copy_n(frames[t].data().data(), per,
                out.data().data() + static_cast<std::int64_t>(t) * per);
  }
  return out;
}

void write_scene_dir(const std::string& dir, const RenderedScene& rs,
                     const RenderOptions& opt) {
  fs::create_directories(dir);
  write_wav((fs::path(dir) / "mono.wav").string(), rs.audio.mono);
  write_wav((fs::path(dir) / "stereo.wav").string(), rs.audio.stereo);
  for (std::size_t i = 0; i < rs.audio.solos.size(); ++i) {
    AudioClip solo;
    solo.sample_rate = opt.sample_rate;
    solo.channels = {rs.audio.solos[i]};
    write_wav((fs::path(dir) / ("solo_" + std::to_string(i) + ".wav")).string(), solo);
  }
  const int t_frames = rs.frames.dim(0);
  char name[32];
  for (int t = 0; t < t_frames; ++t) {
    std::snprintf(name, sizeof(name), "frame_%03d.ppm", t);
    write_ppm((fs::path(dir) / name).string(), slice_outer(rs.frames, t));
  }
  std::ofstream meta((fs::path(dir) / "scene.txt").string());
  meta << "seed = " << rs.scene.seed << "\n";
  meta << "duration_s = " << rs.scene.duration_s << "\n";
  meta << "n_sources = " << rs.scene.sources.size() << "\n";
  for (std::size_t i = 0; i < rs.scene.sources.size(); ++i) {
    const SourceSpec& s = rs.scene.sources[i];
    meta << "src" << i << ".x = " << s.x << "\n";
    meta << "src" << i << ".y = " << s.y << "\n";
    meta << "src" << i << ".timbre = " << timbre_name(s.timbre) << "\n";
    meta << "src" << i << ".f0 = " << s.f0 << "\n";
    meta << "src" << i << ".amplitude = " << s.amplitude << "\n";
  }
}

LoadedScene load_scene_dir(const std::string& dir) {
  LoadedScene scene;
  scene.frames = read_frames_dir(dir);
  scene.mono = read_wav((fs::path(dir) / "mono.wav").string());
  scene.stereo = read_wav((fs::path(dir) / "stereo.wav").string());
  for (int i = 0;; ++i) {
    const fs::path p = fs::path(dir) / ("solo_" + std::to_string(i) + ".wav");
    if (!fs::exists(p)) break;
    scene.solos.push_back(read_wav(p.string()).channels.at(0));
  }
  if (!scene.stereo.stereo())
    throw std::runtime_error("scene: stereo.wav is not 2-channel in " + dir);
  return scene;
}

std::vector<std::string> list_scene_dirs(const std::string& data_dir) {
  std::vector<std::string> dirs;
  if (!fs::is_directory(data_dir))
    throw std::runtime_error("dataset: not a directory: " + data_dir);
  for (const auto& entry : fs::directory_iterator(data_dir))
    if (entry.is_directory() && entry.path().filename().string().starts_with("scene_"))
      dirs.push_back(entry.path().string());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw std::runtime_error("dataset: no scene_* dirs in " + data_dir);
  return dirs;
}

SynthDataset load_dataset(const std::string& data_dir) {
  SynthDataset data;
  for (const auto& dir : list_scene_dirs(data_dir))
    data.scenes.push_back(load_scene_dir(dir));
  return data;
}

void generate_dataset(const std::string& out_dir, int n_scenes,
                      std::uint64_t seed, const SceneDistribution& dist,
                      const RenderOptions& opt) {
  if (n_scenes < 1) throw std::invalid_argument("synth: need at least one scene");
  SplitMix64 rng(seed);
  fs::create_directories(out_dir);
  char name[32];
  for (int i = 0; i < n_scenes; ++i) {
    const Scene scene = random_scene(dist, rng);
    std::snprintf(name, sizeof(name), "scene_%04d", i);
    write_scene_dir((fs::path(out_dir) / name).string(), render_scene(scene, opt), opt);
  }
}

// ---------------------------------------------------------------- sampling

namespace {

std::vector<float> crop(const std::vector<float>& x, std::int64_t start,
                        std::int64_t len) {
  return {x.begin() + start, x.begin() + start + len};
}

void scale_clamp(std::vector<float>& x, float factor) {
  for (float& v : x) v = std::clamp(v * factor, -1.0f, 1.0f);
}

std::int64_t clip_samples(const StftConfig& stft_cfg) {
  return static_cast<std::int64_t>(63) * stft_cfg.hop;  // 0.63 s at the defaults
}

}  // namespace

StereoBatchItem sample_stereo_item(const SynthDataset& data,
                                   const TrainConfig& cfg,
                                   const StftConfig& stft_cfg, SplitMix64& rng) {
  if (data.scenes.empty()) throw std::invalid_argument("sample: empty dataset");
  const std::int64_t len = clip_samples(stft_cfg);
  const LoadedScene& scene =
      data.scenes[static_cast<std::size_t>(rng.below(data.scenes.size()))];
  if (scene.stereo.num_samples() < len)
    throw std::invalid_argument("sample: clip shorter than one window");
  const std::int64_t start = static_cast<std::int64_t>(
      rng.below(static_cast<std::uint64_t>(scene.stereo.num_samples() - len + 1)));
  StereoBatchItem item;
  item.frames = scene.frames;
  item.left = crop(scene.stereo.channels[0], start, len);
  item.right = crop(scene.stereo.channels[1], start, len);
  const float amp = rng.uniform(cfg.amp_lo, cfg.amp_hi);  // joint, keeps L/R ratios
  scale_clamp(item.left, amp);
  scale_clamp(item.right, amp);
  return item;
}

SepBatchItem sample_sep_pair(const SynthDataset& data, const TrainConfig& cfg,
                             const StftConfig& stft_cfg, SplitMix64& rng) {
  if (data.scenes.size() < 2)
    throw std::invalid_argument("sample: dataset too small for a distinct pair");
  const std::int64_t len = clip_samples(stft_cfg);
  const std::size_t ia = static_cast<std::size_t>(rng.below(data.scenes.size()));
  std::size_t ib = static_cast<std::size_t>(rng.below(data.scenes.size() - 1));
  if (ib >= ia) ++ib;
  const LoadedScene& sa = data.scenes[ia];
  const LoadedScene& sb = data.scenes[ib];
  if (sa.mono.num_samples() < len || sb.mono.num_samples() < len)
    throw std::invalid_argument("sample: clip shorter than one window");
  SepBatchItem item;
  item.frames_a = sa.frames;
  item.frames_b = sb.frames;
  const std::int64_t start_a = static_cast<std::int64_t>(
      rng.below(static_cast<std::uint64_t>(sa.mono.num_samples() - len + 1)));
  const std::int64_t start_b = static_cast<std::int64_t>(
      rng.below(static_cast<std::uint64_t>(sb.mono.num_samples() - len + 1)));
  item.a = crop(sa.mono.channels[0], start_a, len);
  item.b = crop(sb.mono.channels[0], start_b, len);
  scale_clamp(item.a, rng.uniform(cfg.amp_lo, cfg.amp_hi));
  scale_clamp(item.b, rng.uniform(cfg.amp_lo, cfg.amp_hi));
  return item;
}

}  // namespace sepstereo
