#include "cli_config.hpp"

#include "hdoms/error.hpp"

namespace hdoms::cli {

const std::set<std::string>& pipeline_keys() {
  static const std::set<std::string> keys = {
      "dim", "levels", "id_precision_bits", "chunked", "chunk_count", "encoder_seed",
      "bin_width", "min_mz", "max_mz",
      "threshold_fraction", "min_peaks", "max_peaks", "transform", "l2_normalize",
      "window", "mode", "k", "fdr_threshold", "fdr_formula", "decoys", "decoy_seed",
      "emulation", "rram.bits_per_cell", "rram.adc_bits", "rram.max_active_rows", "rram.time_bucket",
      "rram.seed", "rram.g_max", "rram.v_ref", "rram.v_pulse", "noise_config", "noise_sigma",
      "threads", "batch_size"};
  return keys;
}

namespace {

std::size_t size_of(const KvConfig& kv, const std::string& key, std::size_t fallback) {
  const auto v = kv.get_int(key);
  if (!v) return fallback;
  if (*v < 0) throw ConfigError(key + " must be non-negative");
  return static_cast<std::size_t>(*v);
}

}  // namespace

PipelineConfig pipeline_config_from(const KvConfig& kv, const std::filesystem::path& base_dir) {
  kv.reject_unknown(pipeline_keys());
  PipelineConfig cfg;
  auto& e = cfg.encoder;
  e.dim = size_of(kv, "dim", e.dim);
  e.levels = size_of(kv, "levels", e.levels);
  e.id_precision_bits = static_cast<unsigned>(size_of(kv, "id_precision_bits", e.id_precision_bits));
  e.chunked = kv.get_bool("chunked").value_or(e.chunked);
  e.chunk_count = size_of(kv, "chunk_count", e.chunk_count);
  e.seed = size_of(kv, "encoder_seed", e.seed);
  cfg.bins.bin_width = kv.get_double("bin_width").value_or(cfg.bins.bin_width);
  cfg.bins.min_mz = kv.get_double("min_mz").value_or(cfg.bins.min_mz);
  cfg.bins.max_mz = kv.get_double("max_mz").value_or(cfg.bins.max_mz);
  auto& p = cfg.preprocess;
  p.threshold_fraction = kv.get_double("threshold_fraction").value_or(p.threshold_fraction);
  p.min_peaks = size_of(kv, "min_peaks", p.min_peaks);
  p.max_peaks = size_of(kv, "max_peaks", p.max_peaks);
  if (const auto t = kv.get_string("transform")) {
    if (*t == "sqrt") p.transform = IntensityTransform::Sqrt;
    else if (*t == "raw") p.transform = IntensityTransform::Raw;
    else throw ConfigError("transform must be sqrt or raw");
  }
  p.l2_normalize = kv.get_bool("l2_normalize").value_or(p.l2_normalize);

  if (kv.contains("mode") && kv.contains("window")) throw ConfigError("give either mode or window, not both");
  if (const auto m = kv.get_string("mode")) {
    if (*m == "open") cfg.window = kOpenWindow;
    else if (*m == "standard") cfg.window = kStandardWindow;
    else throw ConfigError("mode must be open or standard");
  }
  cfg.window = kv.get_double("window").value_or(cfg.window);
  cfg.k = size_of(kv, "k", cfg.k);
  cfg.fdr_threshold = kv.get_double("fdr_threshold").value_or(cfg.fdr_threshold);
  if (const auto f = kv.get_string("fdr_formula")) {
    if (*f == "decoys") cfg.fdr_formula = FdrFormula::DecoysOverTargets;
    else if (*f == "decoys+1") cfg.fdr_formula = FdrFormula::DecoysPlusOneOverTargets;
    else throw ConfigError("fdr_formula must be decoys or decoys+1");
  }
  cfg.decoys = kv.get_bool("decoys").value_or(cfg.decoys);
  cfg.decoy_seed = size_of(kv, "decoy_seed", cfg.decoy_seed);

  if (const auto m = kv.get_string("emulation")) {
    if (*m == "bypass") cfg.emulation = EmulationMode::Bypass;
    else if (*m == "simulate") cfg.emulation = EmulationMode::Simulate;
    else throw ConfigError("emulation must be bypass or simulate");
  }
  auto& r = cfg.rram;
  r.bits_per_cell = static_cast<unsigned>(size_of(kv, "rram.bits_per_cell", r.bits_per_cell));
  r.adc_bits = static_cast<unsigned>(size_of(kv, "rram.adc_bits", r.adc_bits));
  r.max_active_rows = size_of(kv, "rram.max_active_rows", r.max_active_rows);
  if (const auto b = kv.get_string("rram.time_bucket")) r.time_bucket = parse_time_bucket(*b);
  r.seed = size_of(kv, "rram.seed", r.seed);
  r.g_max = kv.get_double("rram.g_max").value_or(r.g_max);
  r.v_ref = kv.get_double("rram.v_ref").value_or(r.v_ref);
  r.v_pulse = kv.get_double("rram.v_pulse").value_or(r.v_pulse);
  if (kv.contains("noise_config") && kv.contains("noise_sigma"))
    throw ConfigError("give either noise_config or noise_sigma, not both");
  if (const auto path = kv.get_string("noise_config")) {
    std::filesystem::path np(*path);
    if (np.is_relative() && !base_dir.empty()) np = base_dir / np;
    cfg.noise = NoiseModel::load(np);
  }
  if (const auto s = kv.get_double("noise_sigma")) cfg.noise = NoiseModel::constant(*s);
  cfg.threads = static_cast<unsigned>(size_of(kv, "threads", cfg.threads));
  cfg.batch_size = size_of(kv, "batch_size", cfg.batch_size);
  cfg.validate();
  return cfg;
}

PipelineConfig merge_pipeline_config(const std::filesystem::path& config_file,
                                     const std::map<std::string, std::string>& overrides) {
  KvConfig kv;
  std::filesystem::path base;
  if (!config_file.empty()) {
    kv = KvConfig::load(config_file);
    kv.reject_unknown(pipeline_keys());
    base = config_file.parent_path();
  }
  for (const auto& [key, value] : overrides) {
    // A flag replaces its file counterpart, including the mutually exclusive pairs.
    if (key == "mode") kv.erase("window");
    if (key == "window") kv.erase("mode");
    if (key == "noise_sigma") kv.erase("noise_config");
    if (key == "noise_config") kv.erase("noise_sigma");
    kv.set(key, value);
  }
  return pipeline_config_from(kv, base);
}

}  // namespace hdoms::cli
