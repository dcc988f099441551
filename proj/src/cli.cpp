#include "lungmix/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lungmix/audio_pipeline.hpp"
#include "lungmix/dataset_io.hpp"
#include "lungmix/error.hpp"
#include "lungmix/mask_engine.hpp"
#include "lungmix/metrics.hpp"
#include "lungmix/mix_engine.hpp"
#include "lungmix/parallel.hpp"
#include "lungmix/synth_corpus.hpp"
#include "lungmix/wav_io.hpp"

namespace lungmix::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kSnapshotName = "run_config.ini";

struct GlobalOptions {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  PipelineConfig pipeline;
  std::string pad_mode = "noise";
  std::string mel_scale = "htk";
};

struct PreprocessOptions {
  std::string input;
  std::string manifest;
  std::string out;
  std::string spec_format = "bin";
};

struct AugmentOptions {
  std::string manifest;
  std::string out;
  std::string strategy = "lungmix";
  std::string mode = "nonlinear";
  std::string pairing = "uniform";
  std::string semantics = "precedence";
  std::string label_maps;
  double alpha = 1.0;
  double density = 0.5;
  double max_skip_rate = 0.05;
  std::size_t pairs = 10;
  bool no_shift = false;
};

struct SynthOptions {
  std::string out;
  std::size_t per_class = 4;
  std::string split = "train";
  SynthSpec spec;
};

struct EvalOptions {
  std::string predictions;
  std::string out;
};

struct InspectOptions {
  std::string a;
  std::string b;
  std::string out;
  std::optional<double> lambda;
  double alpha = 1.0;
  double density = 0.5;
  std::string semantics = "precedence";
  bool no_shift = false;
};

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidConfig: return kConfigError;
    case ErrorKind::kIoError:
    case ErrorKind::kMissingAudio: return kIoError;
    default: return kDataError;
  }
}

void report(std::string_view category, const std::string& message) {
  std::cerr << "lungmix: error[" << category << "]: " << message << '\n';
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::kIoError, "cannot create " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIoError, "cannot create " + path.string());
  out << text;
  if (!out) fail(ErrorKind::kIoError, "write failed: " + path.string());
}

void write_snapshot(const CLI::App& app, const fs::path& dir) {
  write_text(dir / kSnapshotName, app.config_to_str(true, false));
}

MaskSemantics parse_semantics(const std::string& s) {
  return s == "max" ? MaskSemantics::kMax : MaskSemantics::kLoudnessPrecedence;
}

std::string file_stem_for(const std::string& id) {
  std::string out = id;
  for (char& c : out) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  }
  return out;
}

/// Shortest decimal that parses back to the same double, so snapshots replay exactly.
std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CLI::Option* add_real(CLI::App* app, const std::string& name, double& value, const std::string& desc = "") {
  return app->add_option(name, value, desc)->default_str(shortest(value));
}

void resolve(GlobalOptions& g) {
  g.pipeline.pad = g.pad_mode == "zeros" ? PadMode::zeros() : PadMode::noise(g.pipeline.pad.eps);
  g.pipeline.spectrogram.scale = g.mel_scale == "slaney" ? MelScale::kSlaney : MelScale::kHtk;
  validate(g.pipeline);
}

void write_spectrogram(const fs::path& base, const Spectrogram& s, const std::string& format) {
  if (format == "csv") {
    write_spectrogram_csv(fs::path(base).concat(".csv"), s);
  } else {
    write_spectrogram_bin(fs::path(base).concat(".f32"), s);
  }
}

// ---------------------------------------------------------------------------

void run_preprocess(const GlobalOptions& g, const PreprocessOptions& o) {
  require(o.input.empty() != o.manifest.empty(), ErrorKind::kInvalidConfig,
          "preprocess: pass exactly one of --input or --manifest");
  const fs::path out_dir(o.out);
  make_dir(out_dir);

  if (!o.input.empty()) {
    const fs::path input(o.input);
    if (!fs::exists(input)) fail(ErrorKind::kMissingAudio, "audio file not found: " + input.string());
    Rng rng(derive_seed(g.seed, 0));
    const Preprocessed p = preprocess(read_wav(input), g.pipeline, rng);
    const fs::path base = out_dir / input.stem();
    write_wav(fs::path(base).concat(".wav"), p.audio);
    write_spectrogram(base, p.spectrogram, o.spec_format);
    return;
  }

  const fs::path manifest(o.manifest);
  const auto records = load_manifest(manifest);
  std::vector<RecordManifest> rows(records.size());
  parallel_for(records.size(), g.threads, [&](std::size_t i) {
    Rng rng(derive_seed(g.seed, i));
    const RecordManifest& r = records[i];
    const Preprocessed p = preprocess(load_record_audio(manifest.parent_path(), r), g.pipeline, rng);
    const std::string stem = file_stem_for(r.id);
    write_wav(out_dir / (stem + ".wav"), p.audio);
    write_spectrogram(out_dir / stem, p.spectrogram, o.spec_format);

    RecordManifest row = r;
    row.audio_path = stem + ".wav";
    if (r.segment && r.events) {
      std::vector<Event> shifted;
      for (Event e : *r.events) {
        e.onset_s -= r.segment->start_s;
        e.offset_s -= r.segment->start_s;
        if (e.onset_s >= 0.0) shifted.push_back(e);
      }
      row.events = std::move(shifted);
    }
    row.segment.reset();
    rows[i] = std::move(row);
  });
  write_manifest(out_dir / kManifestName, rows);
}

void run_augment(const GlobalOptions& g, const AugmentOptions& o) {
  const Strategy strategy = parse_strategy(o.strategy);
  const InterpolationMode mode = parse_interpolation_mode(o.mode);
  require(o.pairing == "uniform" || o.pairing == "cross-class", ErrorKind::kInvalidConfig,
          "augment: --pairing must be uniform or cross-class");
  MixParams base;
  base.alpha = o.alpha;
  base.random_density = o.density;
  base.semantics = parse_semantics(o.semantics);
  base.shift = !o.no_shift;
  validate(base);

  const fs::path manifest(o.manifest);
  const LabelMaps maps = o.label_maps.empty() ? LabelMaps::builtin() : LabelMaps::load(o.label_maps);
  auto aligned = align_records(load_manifest(manifest), maps, o.max_skip_rate);
  for (const auto& s : aligned.skipped) {
    std::clog << "lungmix: skipped record " << s.index << " (" << s.id << "): " << s.reason << '\n';
  }

  // Pairs are drawn only within the train split.
  std::vector<RecordManifest> train;
  for (auto& r : aligned.kept) {
    if (r.split == Split::kTrain) train.push_back(std::move(r));
  }
  require(!train.empty(), ErrorKind::kInsufficientData, "augment: no train records to mix");
  const bool cross = o.pairing == "cross-class";
  if (cross) {
    const auto first = *train.front().label_unified;
    const bool varied = std::any_of(train.begin(), train.end(),
                                    [&](const RecordManifest& r) { return *r.label_unified != first; });
    require(varied, ErrorKind::kInsufficientData, "augment: cross-class pairing needs two classes");
  }

  std::vector<Waveform> audio(train.size());
  parallel_for(train.size(), g.threads, [&](std::size_t i) {
    audio[i] = resample(load_record_audio(manifest.parent_path(), train[i]), g.pipeline.target_rate);
  });

  const fs::path out_dir(o.out);
  make_dir(out_dir);
  std::vector<RecordManifest> rows(o.pairs);
  parallel_for(o.pairs, g.threads, [&](std::size_t i) {
    Rng rng(derive_seed(g.seed, i));
    const std::size_t n = train.size();
    const std::size_t a = rng.below(n);
    std::size_t b = a;
    if (cross) {
      std::vector<std::size_t> candidates;
      for (std::size_t k = 0; k < n; ++k) {
        if (*train[k].label_unified != *train[a].label_unified) candidates.push_back(k);
      }
      b = candidates[rng.below(candidates.size())];
    } else if (n > 1) {
      b = rng.below(n - 1);
      if (b >= a) ++b;
    }

    MixParams params = base;
    params.lambda = sample_lambda(params.alpha, rng);
    params.seed = rng();

    auto labeled = [&](std::size_t k) {
      return LabeledWaveform{train[k].id, std::string(to_string(train[k].dataset)), audio[k],
                             to_label_vector(*train[k].label_unified)};
    };

    MixResult result;
    if (strategy == Strategy::kPatchmix) {
      auto spectro = [&](std::size_t k, std::uint64_t stream) {
        Rng pad_rng(derive_seed(params.seed, stream));
        const auto w = labeled(k);
        return LabeledSpectrogram{w.id, w.dataset, preprocess(w.audio, g.pipeline, pad_rng).spectrogram, w.label};
      };
      result = patchmix(spectro(a, 1), spectro(b, 2), params, mode);
    } else {
      MixRequest req{labeled(a), labeled(b), params, strategy, mode, g.pipeline.pad};
      result = mix(req);
    }
    rows[i] = write_augmented(result, i, out_dir);
  });
  write_manifest(out_dir / kManifestName, rows);
}

void run_synth(const GlobalOptions& g, SynthOptions o) {
  o.spec.split = parse_split(o.split);
  o.spec.sample_rate = g.pipeline.target_rate;
  const fs::path out_dir(o.out);
  make_dir(out_dir);
  const auto records = synth_corpus(o.spec, o.per_class, g.seed);
  std::vector<RecordManifest> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(r.manifest);
  parallel_for(records.size(), g.threads, [&](std::size_t i) {
    write_wav(out_dir / records[i].manifest.audio_path, records[i].audio);
  });
  write_manifest(out_dir / kManifestName, rows);
}

void run_eval(const EvalOptions& o) {
  const auto pairs = load_predictions(o.predictions);
  const ConfusionMatrix m = confusion(pairs);
  const MetricsReport r = score(m);
  const std::string json = report_to_json(r, m);
  std::cout << report_to_table(r, m);
  if (o.out.empty()) {
    std::cout << json << '\n';
  } else {
    const fs::path out(o.out);
    if (out.has_parent_path()) make_dir(out.parent_path());
    write_text(out, json + "\n");
  }
}

void run_inspect(const GlobalOptions& g, const InspectOptions& o) {
  for (const auto& p : {o.a, o.b}) {
    if (!fs::exists(p)) fail(ErrorKind::kMissingAudio, "audio file not found: " + p);
  }
  Rng rng(g.seed);
  MixParams params;
  params.alpha = o.alpha;
  params.random_density = o.density;
  params.semantics = parse_semantics(o.semantics);
  params.shift = !o.no_shift;
  params.lambda = o.lambda ? *o.lambda : sample_lambda(o.alpha, rng);
  params.seed = rng();
  validate(params);

  const auto& schema = LabelSchema::four_class();
  MixRequest req{{fs::path(o.a).stem().string(), "synthetic", resample(read_wav(o.a), g.pipeline.target_rate), schema.normal()},
                 {fs::path(o.b).stem().string(), "synthetic", resample(read_wav(o.b), g.pipeline.target_rate), schema.normal()},
                 params, Strategy::kLungmix, InterpolationMode::kNonlinear, g.pipeline.pad};
  LungmixTrace trace;
  lungmix(req, &trace);

  std::string csv = "sample_index,m_i,m_j,r,combined\n";
  char buf[96];
  for (std::size_t t = 0; t < trace.mask.size(); ++t) {
    const int n = std::snprintf(buf, sizeof buf, "%zu,%d,%d,%d,%.17g\n", t, trace.m_a[t], trace.m_b[t],
                                trace.r[t], trace.mask.values[t]);
    csv.append(buf, static_cast<std::size_t>(n));
  }
  const fs::path out(o.out);
  if (out.has_parent_path()) make_dir(out.parent_path());
  write_text(out, csv);
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Respiratory-sound augmentation toolkit", "lungmix"};
  app.set_config("--config", "", "Key-value config file; command-line flags override it");
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Master seed; every random draw descends from it")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads; never changes outputs")
      ->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--target-rate", g.pipeline.target_rate, "Resampling target (Hz)")->capture_default_str();
  add_real(&app, "--band-low", g.pipeline.band_low, "Bandpass lower edge (Hz)");
  add_real(&app, "--band-high", g.pipeline.band_high, "Bandpass upper edge (Hz)");
  add_real(&app, "--clip-seconds", g.pipeline.clip_seconds, "Clip length after pad/cut");
  add_real(&app, "--norm-mean", g.pipeline.norm_mean, "Spectrogram normalization mean");
  add_real(&app, "--norm-std", g.pipeline.norm_std, "Spectrogram normalization std");
  app.add_option("--pad", g.pad_mode, "Padding: zeros or noise")
      ->capture_default_str()->check(CLI::IsMember({"zeros", "noise"}));
  add_real(&app, "--pad-eps", g.pipeline.pad.eps, "Noise padding peak amplitude");
  app.add_option("--mel-scale", g.mel_scale, "Mel scale: htk or slaney")
      ->capture_default_str()->check(CLI::IsMember({"htk", "slaney"}));

  PreprocessOptions pre;
  auto* pre_cmd = app.add_subcommand("preprocess", "Resample, bandpass, pad/cut, and compute spectrograms");
  pre_cmd->add_option("--input", pre.input, "Single WAV file");
  pre_cmd->add_option("--manifest", pre.manifest, "JSONL manifest of records");
  pre_cmd->add_option("--out", pre.out, "Output directory")->required();
  pre_cmd->add_option("--spec-format", pre.spec_format, "Spectrogram format: bin or csv")
      ->capture_default_str()->check(CLI::IsMember({"bin", "csv"}));

  AugmentOptions aug;
  auto* aug_cmd = app.add_subcommand("augment", "Mix pairs of train records into an augmented corpus");
  aug_cmd->add_option("--manifest", aug.manifest, "Input JSONL manifest")->required();
  aug_cmd->add_option("--out", aug.out, "Output directory")->required();
  aug_cmd->add_option("--strategy", aug.strategy, "lungmix | mixup | cutmix | patchmix")
      ->capture_default_str()->check(CLI::IsMember({"lungmix", "mixup", "cutmix", "patchmix"}));
  aug_cmd->add_option("--mode", aug.mode, "linear | nonlinear | combined | preserve")
      ->capture_default_str()->check(CLI::IsMember({"linear", "nonlinear", "combined", "preserve"}));
  add_real(aug_cmd, "--alpha", aug.alpha, "Beta(alpha, alpha) shape");
  aug_cmd->add_option("--pairs", aug.pairs, "Number of mixed outputs")->capture_default_str();
  aug_cmd->add_option("--pairing", aug.pairing, "uniform | cross-class")
      ->capture_default_str()->check(CLI::IsMember({"uniform", "cross-class"}));
  aug_cmd->add_option("--semantics", aug.semantics, "Mask combination: precedence | max")
      ->capture_default_str()->check(CLI::IsMember({"precedence", "max"}));
  add_real(aug_cmd, "--density", aug.density, "Random mask density");
  aug_cmd->add_flag("--no-shift", aug.no_shift, "Disable the pre-mix shift/roll");
  aug_cmd->add_option("--label-maps", aug.label_maps, "Label map JSON (defaults to the built-in maps)");
  add_real(aug_cmd, "--max-skip-rate", aug.max_skip_rate, "Fail if more records than this fraction are skipped");

  SynthOptions syn;
  auto* syn_cmd = app.add_subcommand("synth", "Generate a synthetic corpus with event annotations");
  syn_cmd->add_option("--out", syn.out, "Output directory")->required();
  syn_cmd->add_option("--per-class", syn.per_class, "Records per class")->capture_default_str();
  syn_cmd->add_option("--split", syn.split, "train | test")
      ->capture_default_str()->check(CLI::IsMember({"train", "test"}));
  add_real(syn_cmd, "--duration", syn.spec.duration_s, "Seconds per record");
  syn_cmd->add_option("--n-events", syn.spec.n_events, "Events per abnormal component")->capture_default_str();
  add_real(syn_cmd, "--noise-floor", syn.spec.noise_floor, "Background noise peak amplitude");
  add_real(syn_cmd, "--burst-ms", syn.spec.burst_ms, "Crackle burst length (ms)");
  add_real(syn_cmd, "--crackle-amplitude", syn.spec.crackle_amplitude);
  add_real(syn_cmd, "--wheeze-hz", syn.spec.wheeze_hz, "Wheeze tone (100-1000 Hz)");
  add_real(syn_cmd, "--wheeze-amplitude", syn.spec.wheeze_amplitude);
  add_real(syn_cmd, "--wheeze-seconds", syn.spec.wheeze_seconds);

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions with Se / Sp / Sc");
  eval_cmd->add_option("--predictions", ev.predictions, "JSONL rows {id, true, predicted}")->required();
  eval_cmd->add_option("--out", ev.out, "Write the JSON report here instead of stdout");

  InspectOptions ins;
  auto* ins_cmd = app.add_subcommand("inspect-mask", "Dump the masks of one lungmix call as CSV");
  ins_cmd->add_option("--a", ins.a, "First WAV")->required();
  ins_cmd->add_option("--b", ins.b, "Second WAV")->required();
  ins_cmd->add_option("--out", ins.out, "CSV path")->required();
  ins_cmd->add_option("--lambda", ins.lambda, "Fixed lambda; sampled from Beta(alpha, alpha) if omitted");
  add_real(ins_cmd, "--alpha", ins.alpha);
  add_real(ins_cmd, "--density", ins.density);
  ins_cmd->add_option("--semantics", ins.semantics)
      ->capture_default_str()->check(CLI::IsMember({"precedence", "max"}));
  ins_cmd->add_flag("--no-shift", ins.no_shift);

  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report("usage", e.what());
    return kConfigError;
  }

  try {
    resolve(g);
    if (*pre_cmd) {
      run_preprocess(g, pre);
      write_snapshot(app, pre.out);
    } else if (*aug_cmd) {
      run_augment(g, aug);
      write_snapshot(app, aug.out);
    } else if (*syn_cmd) {
      run_synth(g, syn);
      write_snapshot(app, syn.out);
    } else if (*eval_cmd) {
      run_eval(ev);
      if (!ev.out.empty()) write_snapshot(app, fs::path(ev.out).parent_path());
    } else if (*ins_cmd) {
      run_inspect(g, ins);
      write_snapshot(app, fs::path(ins.out).parent_path());
    }
  } catch (const Error& e) {
    report(to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    report("io_error", e.what());
    return kIoError;
  } catch (const std::exception& e) {
    report("internal", e.what());
    return kDataError;
  }
  return kOk;
}

}  // namespace lungmix::cli
