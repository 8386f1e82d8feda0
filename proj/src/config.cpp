#include "acat/config.hpp"

#include <fstream>
#include <sstream>

#include "acat/errors.hpp"
#include "acat/format.hpp"
#include "acat/rng.hpp"

namespace acat {

namespace {

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true" || value == "on") return true;
    if (value == "0" || value == "false" || value == "off") return false;
    throw ConfigError("config: bad boolean for " + key + ": " + value);
}

long parse_long(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError("config: bad integer for " + key + ": " + value);
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError("config: bad number for " + key + ": " + value);
    }
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "seed") seed = static_cast<std::uint64_t>(parse_long(key, value));
    else if (key == "frame_h") frame_h = static_cast<int>(parse_long(key, value));
    else if (key == "frame_w") frame_w = static_cast<int>(parse_long(key, value));
    else if (key == "num_frames") num_frames = static_cast<int>(parse_long(key, value));
    else if (key == "class_count") class_count = static_cast<int>(parse_long(key, value));
    else if (key == "num_shapes") num_shapes = static_cast<int>(parse_long(key, value));
    else if (key == "scroll_speed") scroll_speed = parse_double(key, value);
    else if (key == "noise_sigma") noise_sigma = parse_double(key, value);
    else if (key == "epochs") epochs = static_cast<int>(parse_long(key, value));
    else if (key == "lr") lr = parse_double(key, value);
    else if (key == "train_frames") train_frames = static_cast<int>(parse_long(key, value));
    else if (key == "patch_h") patch_h = static_cast<int>(parse_long(key, value));
    else if (key == "patch_w") patch_w = static_cast<int>(parse_long(key, value));
    else if (key == "beta") beta = parse_double(key, value);
    else if (key == "steps") steps = static_cast<int>(parse_long(key, value));
    else if (key == "step_size") step_size = parse_double(key, value);
    else if (key == "eot_samples") eot_samples = static_cast<int>(parse_long(key, value));
    else if (key == "s_min") s_min = parse_double(key, value);
    else if (key == "s_max") s_max = parse_double(key, value);
    else if (key == "motion_scale") motion_scale = parse_double(key, value);
    else if (key == "targeted") targeted = parse_bool(key, value);
    else if (key == "target_class") target_class = static_cast<int>(parse_long(key, value));
    else if (key == "monitored_layer") defense.monitored_layer = static_cast<int>(parse_long(key, value));
    else if (key == "apply_layer") defense.apply_layer = static_cast<int>(parse_long(key, value));
    else if (key == "tau") defense.tau = parse_double(key, value);
    else if (key == "gaussian_kernel") defense.gaussian_kernel = static_cast<int>(parse_long(key, value));
    else if (key == "dilation_kernel") defense.dilation_kernel = static_cast<int>(parse_long(key, value));
    else if (key == "percentile_v") defense.percentile_v = parse_double(key, value);
    else if (key == "nf") defense.nf_enabled = parse_bool(key, value);
    else if (key == "att_plus") defense.att_plus_enabled = parse_bool(key, value);
    else if (key == "att_minus") defense.att_minus_enabled = parse_bool(key, value);
    else if (key == "upd") defense.upd_enabled = parse_bool(key, value);
    else if (key == "update_period") defense.update_period = static_cast<int>(parse_long(key, value));
    else if (key == "gaussian_sigma") defense.gaussian_sigma = parse_double(key, value);
    else if (key == "normalized_dilation") defense.normalized_dilation = parse_bool(key, value);
    else if (key == "lambda_m") lambda_m = parse_long(key, value);
    else if (key == "provider") {
        if (value != "gt" && value != "detector")
            throw ConfigError("config: provider must be 'gt' or 'detector', got " + value);
        provider = value;
    } else if (key == "detector_deep_layer") detector_deep_layer = static_cast<int>(parse_long(key, value));
    else if (key == "detector_margin") detector_margin = parse_double(key, value);
    else if (key == "require_gt") require_gt = parse_bool(key, value);
    else throw ConfigError("config: unknown key: " + key);
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
        set(line.substr(0, eq), line.substr(eq + 1));
    }
}

std::string RunConfig::resolved() const {
    std::ostringstream out;
    out << "# " << kToolVersion << " resolved configuration\n"
        << "seed=" << seed << "\n"
        << "frame_h=" << frame_h << "\n"
        << "frame_w=" << frame_w << "\n"
        << "num_frames=" << num_frames << "\n"
        << "class_count=" << class_count << "\n"
        << "num_shapes=" << num_shapes << "\n"
        << "scroll_speed=" << fmt_double(scroll_speed) << "\n"
        << "noise_sigma=" << fmt_double(noise_sigma) << "\n"
        << "epochs=" << epochs << "\n"
        << "lr=" << fmt_double(lr) << "\n"
        << "train_frames=" << train_frames << "\n"
        << "patch_h=" << patch_h << "\n"
        << "patch_w=" << patch_w << "\n"
        << "beta=" << fmt_double(beta) << "\n"
        << "steps=" << steps << "\n"
        << "step_size=" << fmt_double(step_size) << "\n"
        << "eot_samples=" << eot_samples << "\n"
        << "s_min=" << fmt_double(s_min) << "\n"
        << "s_max=" << fmt_double(s_max) << "\n"
        << "motion_scale=" << fmt_double(motion_scale) << "\n"
        << "targeted=" << (targeted ? 1 : 0) << "\n"
        << "target_class=" << target_class << "\n"
        << "monitored_layer=" << defense.monitored_layer << "\n"
        << "apply_layer=" << defense.apply_layer << "\n"
        << "tau=" << fmt_double(defense.tau) << "\n"
        << "gaussian_kernel=" << defense.gaussian_kernel << "\n"
        << "dilation_kernel=" << defense.dilation_kernel << "\n"
        << "percentile_v=" << fmt_double(defense.percentile_v) << "\n"
        << "nf=" << (defense.nf_enabled ? 1 : 0) << "\n"
        << "att_plus=" << (defense.att_plus_enabled ? 1 : 0) << "\n"
        << "att_minus=" << (defense.att_minus_enabled ? 1 : 0) << "\n"
        << "upd=" << (defense.upd_enabled ? 1 : 0) << "\n"
        << "update_period=" << defense.update_period << "\n"
        << "gaussian_sigma=" << fmt_double(defense.gaussian_sigma) << "\n"
        << "normalized_dilation=" << (defense.normalized_dilation ? 1 : 0) << "\n"
        << "lambda_m=" << lambda_m << "\n"
        << "provider=" << provider << "\n"
        << "detector_deep_layer=" << detector_deep_layer << "\n"
        << "detector_margin=" << fmt_double(detector_margin) << "\n"
        << "require_gt=" << (require_gt ? 1 : 0) << "\n";
    return out.str();
}

SceneSpec RunConfig::scene_spec() const {
    SceneSpec scene;
    scene.seed = derive_seed(seed, 0x5ce7e);
    scene.frame_h = frame_h;
    scene.frame_w = frame_w;
    scene.class_count = class_count;
    scene.num_shapes = num_shapes;
    scene.scroll_speed = scroll_speed;
    scene.noise_sigma = noise_sigma;
    return scene;
}

AttackConfig RunConfig::attack_config() const {
    AttackConfig cfg;
    cfg.beta = beta;
    cfg.steps = steps;
    cfg.step_size = step_size;
    cfg.monitored_layers = {defense.monitored_layer};
    cfg.targeted = targeted;
    cfg.target_class = target_class;
    cfg.eot_samples = eot_samples;
    cfg.s_min = s_min;
    cfg.s_max = s_max;
    return cfg;
}

MotionParams RunConfig::motion(int phase_seed) const {
    MotionParams m = default_motion(frame_h, frame_w);
    m.a_x *= motion_scale;
    m.a_y *= motion_scale;
    m.a_s *= motion_scale;
    if (phase_seed >= 0) {
        Rng rng(derive_seed(seed, 0x0317 + static_cast<std::uint64_t>(phase_seed)));
        const double two_pi = 6.283185307179586476925286766559;
        m.omega_x = rng.uniform(0.0, two_pi);
        m.omega_y = rng.uniform(0.0, two_pi);
        m.omega_s = rng.uniform(0.0, two_pi);
    }
    return m;
}

}  // namespace acat
