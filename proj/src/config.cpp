#include "fforge/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

namespace fforge {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

long parse_int(const std::string& key, const std::string& v) {
  long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw InputError("config key '" + key + "': expected an integer, got '" + v + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw InputError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw InputError("config key '" + key + "': expected a number, got '" + v + "'");
  return out;
}

std::vector<std::string> split_commas(const std::string& v) {
  std::vector<std::string> out;
  std::istringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

std::vector<Index> parse_index_list(const std::string& key, const std::string& v) {
  std::vector<Index> out;
  for (const auto& item : split_commas(v)) out.push_back(parse_int(key, item));
  if (out.empty()) throw InputError("config key '" + key + "': empty list");
  return out;
}

std::array<Index, 4> four(const std::string& key, const std::vector<Index>& v) {
  if (v.size() != 4) throw InputError("config key '" + key + "': expected 4 comma-separated values");
  return {v[0], v[1], v[2], v[3]};
}

template <typename Range>
std::string join(const Range& r) {
  std::ostringstream os;
  os << std::setprecision(17);
  bool first = true;
  for (const auto& x : r) {
    os << (first ? "" : ",") << x;
    first = false;
  }
  return os.str();
}

std::string real_text(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

void TrainConfig::validate() const {
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(gen_lr > 0) || !(disc_lr > 0)) throw ConfigError("learning rates must be positive");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1) || !(adam_beta2 >= 0 && adam_beta2 < 1))
    throw ConfigError("adam betas must lie in [0, 1)");
  if (disc_steps_per_gen_step < 1) throw ConfigError("disc_steps_per_gen_step must be >= 1");
  if (checkpoint_interval < 1) throw ConfigError("checkpoint_interval must be >= 1");
  weights.validate();
  patch.validate();
  if (patch.size % GeneratorConfig::input_multiple != 0)
    throw ConfigError("patch_size must be a multiple of " + std::to_string(GeneratorConfig::input_multiple));
  generator.validate();
  discriminator.validate();
  if (discriminator.input_extent != patch.size)
    throw ConfigError("discriminator input extent must equal patch_size");
}

void GridSpec::validate() const {
  if (alphas.empty() || betas.empty()) throw ConfigError("grid: alpha and beta lists must be non-empty");
  for (double a : alphas)
    if (!(a >= 0)) throw ConfigError("grid: alphas must be >= 0");
  for (double b : betas)
    if (!(b >= 0 && b <= 1)) throw ConfigError("grid: betas must lie in [0, 1]");
  if (steps_per_cell < 1) throw ConfigError("grid: steps_per_cell must be >= 1");
  reference.validate();
  if (!(holdout_fraction > 0 && holdout_fraction < 1)) throw ConfigError("grid: holdout_fraction must lie in (0, 1)");
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InputError("config line " + std::to_string(number) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) throw InputError("config line " + std::to_string(number) + ": empty key");
    if (!kv.emplace(key, value).second)
      throw InputError("config line " + std::to_string(number) + ": repeated key '" + key + "'");
  }
  return kv;
}

TrainConfig parse_train_config(const std::string& text) { return parse_train_config(parse_key_values(text)); }

TrainConfig parse_train_config(const std::map<std::string, std::string>& kv) {
  TrainConfig c;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters{
      {"seed", [&](auto& k, auto& v) { c.seed = parse_u64(k, v); }},
      {"steps", [&](auto& k, auto& v) { c.steps = parse_int(k, v); }},
      {"batch_size", [&](auto& k, auto& v) { c.batch_size = parse_int(k, v); }},
      {"gen_lr", [&](auto& k, auto& v) { c.gen_lr = parse_real(k, v); }},
      {"disc_lr", [&](auto& k, auto& v) { c.disc_lr = parse_real(k, v); }},
      {"adam_beta1", [&](auto& k, auto& v) { c.adam_beta1 = parse_real(k, v); }},
      {"adam_beta2", [&](auto& k, auto& v) { c.adam_beta2 = parse_real(k, v); }},
      {"disc_steps_per_gen_step", [&](auto& k, auto& v) { c.disc_steps_per_gen_step = parse_int(k, v); }},
      {"alpha", [&](auto& k, auto& v) { c.weights.alpha = parse_real(k, v); }},
      {"beta", [&](auto& k, auto& v) { c.weights.beta = parse_real(k, v); }},
      {"adversarial",
       [&](auto& k, auto& v) {
         if (v == "literal")
           c.adversarial = AdversarialForm::literal;
         else if (v == "non_saturating")
           c.adversarial = AdversarialForm::non_saturating;
         else
           throw InputError("config key '" + k + "': expected literal or non_saturating");
       }},
      {"patch_size", [&](auto& k, auto& v) { c.patch.size = parse_int(k, v); }},
      {"patch_stride", [&](auto& k, auto& v) { c.patch.stride = parse_int(k, v); }},
      {"checkpoint_interval", [&](auto& k, auto& v) { c.checkpoint_interval = parse_int(k, v); }},
      {"log_path", [&](auto&, auto& v) { c.log_path = v; }},
      {"gen.stem_channels", [&](auto& k, auto& v) { c.generator.stem_channels = parse_int(k, v); }},
      {"gen.stage_widths", [&](auto& k, auto& v) { c.generator.stage_widths = four(k, parse_index_list(k, v)); }},
      {"gen.blocks_per_stage",
       [&](auto& k, auto& v) { c.generator.blocks_per_stage = four(k, parse_index_list(k, v)); }},
      {"gen.expansion", [&](auto& k, auto& v) { c.generator.bottleneck_expansion = parse_int(k, v); }},
      {"gen.latent_fusion",
       [&](auto& k, auto& v) {
         if (v == "sum")
           c.generator.fusion = LatentFusion::sum;
         else if (v == "average")
           c.generator.fusion = LatentFusion::average;
         else
           throw InputError("config key '" + k + "': expected sum or average");
       }},
      {"gen.encoder_feed",
       [&](auto& k, auto& v) {
         if (v == "branch_private")
           c.generator.encoder_feed = EncoderFeed::branch_private;
         else if (v == "fused")
           c.generator.encoder_feed = EncoderFeed::fused;
         else
           throw InputError("config key '" + k + "': expected branch_private or fused");
       }},
      {"disc.stem_channels", [&](auto& k, auto& v) { c.discriminator.stem_channels = parse_int(k, v); }},
      {"disc.stage_widths", [&](auto& k, auto& v) { c.discriminator.stage_widths = parse_index_list(k, v); }},
      {"disc.blocks_per_stage",
       [&](auto& k, auto& v) { c.discriminator.blocks_per_stage = parse_index_list(k, v); }},
      {"disc.hidden", [&](auto& k, auto& v) { c.discriminator.hidden = parse_int(k, v); }},
      {"disc.expansion", [&](auto& k, auto& v) { c.discriminator.bottleneck_expansion = parse_int(k, v); }},
  };
  for (const auto& [key, value] : kv) {
    if (key.rfind("grid.", 0) == 0) continue;
    const auto it = setters.find(key);
    if (it == setters.end()) throw InputError("unknown config key '" + key + "'");
    it->second(key, value);
  }
  const auto& sw = c.generator.stage_widths;
  c.generator.decoder_widths = {sw[3], sw[2], sw[1], sw[0]};
  c.discriminator.input_extent = c.patch.size;
  c.patch.seed = c.seed;
  c.validate();
  return c;
}

GridSpec parse_grid_spec(const std::map<std::string, std::string>& kv, const TrainConfig& base) {
  GridSpec g;
  g.reference = base.weights;
  g.steps_per_cell = base.steps;
  for (const auto& [key, value] : kv) {
    if (key.rfind("grid.", 0) != 0) continue;
    if (key == "grid.alphas")
      g.alphas = parse_real_list(value);
    else if (key == "grid.betas")
      g.betas = parse_real_list(value);
    else if (key == "grid.steps_per_cell")
      g.steps_per_cell = parse_int(key, value);
    else if (key == "grid.reference_alpha")
      g.reference.alpha = parse_real(key, value);
    else if (key == "grid.reference_beta")
      g.reference.beta = parse_real(key, value);
    else if (key == "grid.holdout_fraction")
      g.holdout_fraction = parse_real(key, value);
    else
      throw InputError("unknown config key '" + key + "'");
  }
  g.validate();
  return g;
}

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_commas(text)) out.push_back(parse_real("list", item));
  if (out.empty()) throw InputError("empty number list");
  return out;
}

std::string config_text(const TrainConfig& c) {
  std::ostringstream os;
  os << "seed = " << c.seed << '\n'
     << "steps = " << c.steps << '\n'
     << "batch_size = " << c.batch_size << '\n'
     << "gen_lr = " << real_text(c.gen_lr) << '\n'
     << "disc_lr = " << real_text(c.disc_lr) << '\n'
     << "adam_beta1 = " << real_text(c.adam_beta1) << '\n'
     << "adam_beta2 = " << real_text(c.adam_beta2) << '\n'
     << "disc_steps_per_gen_step = " << c.disc_steps_per_gen_step << '\n'
     << "alpha = " << real_text(c.weights.alpha) << '\n'
     << "beta = " << real_text(c.weights.beta) << '\n'
     << "adversarial = " << (c.adversarial == AdversarialForm::literal ? "literal" : "non_saturating") << '\n'
     << "patch_size = " << c.patch.size << '\n'
     << "patch_stride = " << c.patch.stride << '\n'
     << "checkpoint_interval = " << c.checkpoint_interval << '\n'
     << "log_path = " << c.log_path << '\n'
     << "gen.stem_channels = " << c.generator.stem_channels << '\n'
     << "gen.stage_widths = " << join(c.generator.stage_widths) << '\n'
     << "gen.blocks_per_stage = " << join(c.generator.blocks_per_stage) << '\n'
     << "gen.expansion = " << c.generator.bottleneck_expansion << '\n'
     << "gen.latent_fusion = " << (c.generator.fusion == LatentFusion::sum ? "sum" : "average") << '\n'
     << "gen.encoder_feed = "
     << (c.generator.encoder_feed == EncoderFeed::branch_private ? "branch_private" : "fused") << '\n'
     << "disc.stem_channels = " << c.discriminator.stem_channels << '\n'
     << "disc.stage_widths = " << join(c.discriminator.stage_widths) << '\n'
     << "disc.blocks_per_stage = " << join(c.discriminator.blocks_per_stage) << '\n'
     << "disc.hidden = " << c.discriminator.hidden << '\n'
     << "disc.expansion = " << c.discriminator.bottleneck_expansion << '\n';
  return os.str();
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path.string() + ": cannot open");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace fforge
