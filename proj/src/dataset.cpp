#include "acat/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "acat/errors.hpp"
#include "acat/format.hpp"
#include "acat/image_io.hpp"

namespace fs = std::filesystem;

namespace acat {

namespace {

std::string numbered(const std::string& dir, const char* sub, int k, const char* ext) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06d.%s", k, ext);
    return (fs::path(dir) / sub / name).string();
}

std::map<std::string, std::string> read_kv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError(path + ": expected key=value: " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

}  // namespace

VideoDataset gen_video_dataset(const SceneSpec& scene, int num_frames,
                               const AdversarialPatch& patch, const MotionParams& motion,
                               const std::string& out_dir) {
    if (num_frames < 1) throw ConfigError("gen_video_dataset: num_frames must be >= 1");
    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "frames", ec);
    fs::create_directories(fs::path(out_dir) / "masks", ec);
    fs::create_directories(fs::path(out_dir) / "labels", ec);
    if (ec) throw IoError("cannot create dataset directories under " + out_dir);

    VideoDataset ds;
    ds.dir = out_dir;
    ds.num_frames = num_frames;
    ds.frame_h = scene.frame_h;
    ds.frame_w = scene.frame_w;
    ds.class_count = scene.class_count;
    ds.seed = scene.seed;
    ds.motion = motion;

    const std::string patch_path = (fs::path(out_dir) / "patch.ppm").string();
    write_ppm(patch_path, patch.pixels);

    for (int k = 0; k < num_frames; ++k) {
        const LabeledFrame bg = render_frame(scene, k);
        const Placement pl = patch_trajectory(motion, k);
        PasteResult pasted = paste_patch(bg.image, patch, pl);
        // Land the composite on the 8-bit grid so the files reproduce the
        // in-memory values exactly.
        for (double& v : pasted.frame.data) v = quantize8(v);

        write_ppm(numbered(out_dir, "frames", k, "ppm"), pasted.frame);
        write_pgm_mask(numbered(out_dir, "masks", k, "pgm"), pasted.covered.complement());
        write_pgm_labels(numbered(out_dir, "labels", k, "pgm"), bg.labels, scene.frame_h,
                         scene.frame_w);

        ds.frames.push_back(std::move(pasted.frame));
        ds.gt_masks.push_back(pasted.covered.complement());
        ds.labels.push_back(bg.labels);
    }

    std::ofstream manifest((fs::path(out_dir) / "manifest.txt").string());
    if (!manifest) throw IoError("cannot write manifest under " + out_dir);
    manifest << "seed=" << scene.seed << "\n"
             << "num_frames=" << num_frames << "\n"
             << "frame_h=" << scene.frame_h << "\n"
             << "frame_w=" << scene.frame_w << "\n"
             << "class_count=" << scene.class_count << "\n"
             << "num_shapes=" << scene.num_shapes << "\n"
             << "scroll_speed=" << fmt_double(scene.scroll_speed) << "\n"
             << "noise_sigma=" << fmt_double(scene.noise_sigma) << "\n"
             << "patch=patch.ppm\n"
             << "patch_h=" << patch.height() << "\n"
             << "patch_w=" << patch.width() << "\n"
             << "a_x=" << fmt_double(motion.a_x) << "\n"
             << "a_y=" << fmt_double(motion.a_y) << "\n"
             << "a_s=" << fmt_double(motion.a_s) << "\n"
             << "alpha_x=" << fmt_double(motion.alpha_x) << "\n"
             << "alpha_y=" << fmt_double(motion.alpha_y) << "\n"
             << "alpha_s=" << fmt_double(motion.alpha_s) << "\n"
             << "omega_x=" << fmt_double(motion.omega_x) << "\n"
             << "omega_y=" << fmt_double(motion.omega_y) << "\n"
             << "omega_s=" << fmt_double(motion.omega_s) << "\n"
             << "c_x=" << fmt_double(motion.c_x) << "\n"
             << "c_y=" << fmt_double(motion.c_y) << "\n";
    return ds;
}

VideoDataset load_video_dataset(const std::string& dir) {
    const auto kv = read_kv((fs::path(dir) / "manifest.txt").string());
    const auto need = [&](const char* key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end())
            throw FormatError(dir + "/manifest.txt: missing key " + key);
        return it->second;
    };

    VideoDataset ds;
    ds.dir = dir;
    ds.seed = std::stoull(need("seed"));
    ds.num_frames = std::stoi(need("num_frames"));
    ds.frame_h = std::stoi(need("frame_h"));
    ds.frame_w = std::stoi(need("frame_w"));
    ds.class_count = std::stoi(need("class_count"));
    ds.motion.a_x = std::stod(need("a_x"));
    ds.motion.a_y = std::stod(need("a_y"));
    ds.motion.a_s = std::stod(need("a_s"));
    ds.motion.alpha_x = std::stod(need("alpha_x"));
    ds.motion.alpha_y = std::stod(need("alpha_y"));
    ds.motion.alpha_s = std::stod(need("alpha_s"));
    ds.motion.omega_x = std::stod(need("omega_x"));
    ds.motion.omega_y = std::stod(need("omega_y"));
    ds.motion.omega_s = std::stod(need("omega_s"));
    ds.motion.c_x = std::stod(need("c_x"));
    ds.motion.c_y = std::stod(need("c_y"));

    // Masks are optional on load; run-level validation decides whether their
    // absence is an error.
    const bool have_masks = fs::exists(numbered(dir, "masks", 0, "pgm"));
    for (int k = 0; k < ds.num_frames; ++k) {
        ds.frames.push_back(read_ppm(numbered(dir, "frames", k, "ppm")));
        if (have_masks) ds.gt_masks.push_back(read_pgm_mask(numbered(dir, "masks", k, "pgm")));
        int h = 0, w = 0;
        ds.labels.push_back(read_pgm_labels(numbered(dir, "labels", k, "pgm"), h, w));
        if (h != ds.frame_h || w != ds.frame_w)
            throw FormatError(dir + ": label dims do not match manifest");
    }
    return ds;
}

}  // namespace acat
