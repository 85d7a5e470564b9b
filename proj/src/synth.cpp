#include "affect/synth.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace affect {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Rgb {
    uint8_t r, g, b;
};

void fill_ellipse(Image& img, double cx, double cy, double rx, double ry, Rgb color,
                  double gain = 1.0) {
    int y0 = std::max(0, static_cast<int>(std::floor(cy - ry)));
    int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(cy + ry)));
    for (int y = y0; y <= y1; ++y) {
        double dy = (y - cy) / ry;
        double span = 1.0 - dy * dy;
        if (span <= 0) continue;
        double half = rx * std::sqrt(span);
        int x0 = std::max(0, static_cast<int>(std::floor(cx - half)));
        int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(cx + half)));
        for (int x = x0; x <= x1; ++x) {
            img.at(y, x, 0) = static_cast<uint8_t>(std::clamp(color.r * gain, 0.0, 255.0));
            img.at(y, x, 1) = static_cast<uint8_t>(std::clamp(color.g * gain, 0.0, 255.0));
            img.at(y, x, 2) = static_cast<uint8_t>(std::clamp(color.b * gain, 0.0, 255.0));
        }
    }
}

void fill_rect(Image& img, int x0, int y0, int x1, int y1, Rgb color, double gain) {
    x0 = std::clamp(x0, 0, img.width - 1);
    x1 = std::clamp(x1, 0, img.width - 1);
    y0 = std::clamp(y0, 0, img.height - 1);
    y1 = std::clamp(y1, 0, img.height - 1);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            img.at(y, x, 0) = static_cast<uint8_t>(std::clamp(color.r * gain, 0.0, 255.0));
            img.at(y, x, 1) = static_cast<uint8_t>(std::clamp(color.g * gain, 0.0, 255.0));
            img.at(y, x, 2) = static_cast<uint8_t>(std::clamp(color.b * gain, 0.0, 255.0));
        }
}

/// Geometry of one rendered face. All landmark positions are analytic
/// functions of these parameters.
struct FaceGeom {
    double cx, cy;       // face center
    double rx, ry;       // face semi-axes
    double curvature;    // mouth curvature in [-1, 1] (valence / 10)
    double openness;     // eye openness in [0, 1]

    double eye_dx() const { return 0.42 * rx; }
    double eye_y() const { return cy - 0.22 * ry; }
    double eye_w() const { return 0.17 * rx; }
    double eye_h() const { return (0.15 + 0.85 * openness) * 0.12 * ry; }
    double brow_y() const { return eye_y() - (0.10 + 0.10 * openness) * ry; }
    double mouth_y() const { return cy + 0.52 * ry; }
    double mouth_w() const { return 0.38 * rx; }
    double mouth_bend() const { return -curvature * 0.45 * mouth_w(); }
    double lip_half() const { return 0.045 * ry; }

    double mouth_base(double x) const {  // x in [-1, 1] of mouth half-width
        return mouth_y() + mouth_bend() * (x * x - 0.5);
    }
};

std::array<Landmark, kNumLandmarks> face_landmarks(const FaceGeom& f) {
    std::array<Landmark, kNumLandmarks> lm{};
    // 0-16 jaw: left ear through chin to right ear along the face ellipse.
    for (int k = 0; k <= 16; ++k) {
        double th = M_PI + k * (M_PI / 16.0);
        lm[k] = {f.cx + f.rx * std::cos(th), f.cy - f.ry * std::sin(th)};
    }
    // 17-26 brows: arcs above each eye.
    for (int side = 0; side < 2; ++side) {
        double ex = f.cx + (side == 0 ? -f.eye_dx() : f.eye_dx());
        double by = f.brow_y();
        for (int k = 0; k < 5; ++k) {
            double t = (k - 2) / 2.0;
            lm[17 + 5 * side + k] = {ex + t * f.eye_w() * 1.3,
                                     by - 0.035 * f.ry * (1.0 - t * t)};
        }
    }
    // 27-30 nose bridge, 31-35 nose base.
    for (int k = 0; k < 4; ++k)
        lm[27 + k] = {f.cx, f.cy - 0.12 * f.ry + k * 0.11 * f.ry};
    for (int k = 0; k < 5; ++k)
        lm[31 + k] = {f.cx + (k - 2) * 0.055 * f.rx, f.cy + 0.30 * f.ry};
    // 36-47 eyes: hexagon on each eye ellipse (outer corner first).
    const double angles[6] = {180, 120, 60, 0, -60, -120};
    for (int side = 0; side < 2; ++side) {
        double ex = f.cx + (side == 0 ? -f.eye_dx() : f.eye_dx());
        for (int k = 0; k < 6; ++k) {
            double th = angles[k] * M_PI / 180.0;
            lm[36 + 6 * side + k] = {ex + f.eye_w() * std::cos(th),
                                     f.eye_y() - f.eye_h() * std::sin(th)};
        }
    }
    // 48-59 outer lip, 60-67 inner lip, both on the analytic mouth curves.
    const double w = f.mouth_w();
    auto outer_upper = [&](double t) {
        return Landmark{f.cx + t * w, f.mouth_base(t) - f.lip_half()};
    };
    auto outer_lower = [&](double t) {
        return Landmark{f.cx + t * w, f.mouth_base(t) + f.lip_half()};
    };
    lm[48] = {f.cx - w, f.mouth_base(-1.0)};
    for (int k = 0; k < 5; ++k) lm[49 + k] = outer_upper((k - 2) / 3.0);
    lm[54] = {f.cx + w, f.mouth_base(1.0)};
    for (int k = 0; k < 5; ++k) lm[55 + k] = outer_lower((2 - k) / 3.0);
    lm[60] = {f.cx - 0.8 * w, f.mouth_base(-0.8)};
    for (int k = 0; k < 3; ++k)
        lm[61 + k] = {f.cx + (k - 1) * 0.4 * w,
                      f.mouth_base((k - 1) * 0.4) - 0.4 * f.lip_half()};
    lm[64] = {f.cx + 0.8 * w, f.mouth_base(0.8)};
    for (int k = 0; k < 3; ++k)
        lm[65 + k] = {f.cx + (1 - k) * 0.4 * w,
                      f.mouth_base((1 - k) * 0.4) + 0.4 * f.lip_half()};
    return lm;
}

void render_face(Image& img, const FaceGeom& f, double gain) {
    const Rgb skin{208, 172, 140}, sclera{245, 245, 245}, iris{60, 45, 35};
    const Rgb brow{70, 50, 40}, lip{150, 60, 60}, nose{170, 135, 105};

    fill_ellipse(img, f.cx, f.cy, f.rx, f.ry, skin, gain);
    for (int side = 0; side < 2; ++side) {
        double ex = f.cx + (side == 0 ? -f.eye_dx() : f.eye_dx());
        fill_ellipse(img, ex, f.brow_y(), f.eye_w() * 1.3, 0.022 * f.ry + 0.8, brow, gain);
        fill_ellipse(img, ex, f.eye_y(), f.eye_w(), std::max(f.eye_h(), 0.6), sclera, gain);
        double pupil = std::min(f.eye_w() * 0.45, std::max(f.eye_h() * 0.8, 0.5));
        fill_ellipse(img, ex, f.eye_y(), pupil, pupil, iris, gain);
    }
    fill_ellipse(img, f.cx, f.cy + 0.22 * f.ry, 0.07 * f.rx, 0.10 * f.ry, nose, gain);

    // Mouth: fill between the outer upper and lower lip curves column-wise.
    const double w = f.mouth_w();
    int x0 = static_cast<int>(std::floor(f.cx - w));
    int x1 = static_cast<int>(std::ceil(f.cx + w));
    for (int x = std::max(0, x0); x <= std::min(img.width - 1, x1); ++x) {
        double t = (x - f.cx) / w;
        if (std::abs(t) > 1.0) continue;
        double taper = std::sqrt(std::max(0.0, 1.0 - t * t * t * t));
        double yu = f.mouth_base(t) - f.lip_half() * taper;
        double yl = f.mouth_base(t) + f.lip_half() * taper;
        for (int y = static_cast<int>(std::floor(yu)); y <= static_cast<int>(std::ceil(yl)); ++y) {
            if (y < 0 || y >= img.height) continue;
            img.at(y, x, 0) = static_cast<uint8_t>(std::clamp(lip.r * gain, 0.0, 255.0));
            img.at(y, x, 1) = static_cast<uint8_t>(std::clamp(lip.g * gain, 0.0, 255.0));
            img.at(y, x, 2) = static_cast<uint8_t>(std::clamp(lip.b * gain, 0.0, 255.0));
        }
    }
}

void render_background(Image& img, Rng& rng, double gain) {
    Rgb base{static_cast<uint8_t>(rng.uniform_int(30, 110)),
             static_cast<uint8_t>(rng.uniform_int(30, 110)),
             static_cast<uint8_t>(rng.uniform_int(30, 110))};
    for (int y = 0; y < img.height; ++y) {
        double shade = 0.6 + 0.4 * y / img.height;
        for (int x = 0; x < img.width; ++x) {
            img.at(y, x, 0) = static_cast<uint8_t>(std::clamp(base.r * shade * gain, 0.0, 255.0));
            img.at(y, x, 1) = static_cast<uint8_t>(std::clamp(base.g * shade * gain, 0.0, 255.0));
            img.at(y, x, 2) = static_cast<uint8_t>(std::clamp(base.b * shade * gain, 0.0, 255.0));
        }
    }
    int n_rects = rng.uniform_int(2, 4);
    for (int k = 0; k < n_rects; ++k) {
        int x0 = rng.uniform_int(0, img.width - 2), y0 = rng.uniform_int(0, img.height - 2);
        Rgb c{static_cast<uint8_t>(rng.uniform_int(20, 140)),
              static_cast<uint8_t>(rng.uniform_int(20, 140)),
              static_cast<uint8_t>(rng.uniform_int(20, 140))};
        fill_rect(img, x0, y0, x0 + rng.uniform_int(8, 40), y0 + rng.uniform_int(8, 40), c, gain);
    }
}

int clamp_label(int v) { return std::clamp(v, kLabelMin, kLabelMax); }

}  // namespace

DatasetIndex generate_synthetic_dataset(const SynthConfig& cfg, const fs::path& out) {
    if (cfg.n_clips < 1) throw AffectError("n_clips must be >= 1");
    if (cfg.frames_min < 8 || cfg.frames_max > 200 || cfg.frames_min > cfg.frames_max)
        throw AffectError("frames range must lie within [8, 200]");
    std::error_code ec;
    fs::create_directories(out, ec);
    if (!fs::is_directory(out)) throw AffectError("cannot create output directory " + out.string());

    std::map<std::string, SignalWindow> windows;

    for (int ci = 0; ci < cfg.n_clips; ++ci) {
        Rng rng(Rng::mix(cfg.seed, static_cast<uint64_t>(ci)));
        char id[32];
        std::snprintf(id, sizeof(id), "clip_%04d", ci);

        ClipRecord clip;
        clip.clip_id = id;
        clip.dir = out / id;
        fs::create_directories(clip.dir);
        clip.fps = 30;

        const int F = rng.uniform_int(cfg.frames_min, cfg.frames_max);
        const int S = cfg.image_size;

        // Label trajectories.
        std::vector<int> val(F), aro(F);
        SignalWindow win{0, F};
        if (cfg.signal_mode) {
            // Constant expressive label; appearance carries it only in-window.
            double ang = rng.uniform(0.0, 2.0 * M_PI);
            double rad = rng.uniform(6.0, 9.5);
            int v = clamp_label(static_cast<int>(std::lround(rad * std::cos(ang))));
            int a = clamp_label(static_cast<int>(std::lround(rad * std::sin(ang))));
            if (std::hypot(v, a) < 3.0) v = 7;  // keep the label clearly expressive
            std::fill(val.begin(), val.end(), v);
            std::fill(aro.begin(), aro.end(), a);
            int w = std::max(1, static_cast<int>(std::lround(cfg.signal_fraction * F)));
            int s = rng.uniform_int(0, F - w);
            win = {s, s + w};
            windows[clip.clip_id] = win;
        } else {
            val[0] = rng.uniform_int(kLabelMin, kLabelMax);
            aro[0] = rng.uniform_int(kLabelMin, kLabelMax);
            for (int t = 1; t < F; ++t) {
                val[t] = clamp_label(val[t - 1] + rng.uniform_int(-2, 2));
                aro[t] = clamp_label(aro[t - 1] + rng.uniform_int(-2, 2));
            }
        }

        // Per-clip placement and illumination.
        const double rx = rng.uniform(0.28, 0.34) * S;
        const double ry = 1.22 * rx;
        const double margin_x = S / 2.0 - rx - 4.0;
        const double margin_y = S / 2.0 - ry - 4.0;
        double cx = S / 2.0 + rng.uniform(-0.5, 0.5) * margin_x;
        double cy = S / 2.0 + rng.uniform(-0.5, 0.5) * margin_y;
        const double gain0 = rng.uniform(0.65, 1.1);

        clip.frame_width = S;
        clip.frame_height = S;
        clip.annotations.resize(F);
        for (int t = 0; t < F; ++t) {
            const bool expressive = !cfg.signal_mode || (t >= win.begin && t < win.end);
            const double v01 = val[t] / 10.0;          // [-1, 1]
            const double a01 = (aro[t] + 10) / 20.0;   // [0, 1]

            FaceGeom f;
            f.rx = rx;
            f.ry = ry;
            if (expressive) {
                f.curvature = v01;
                f.openness = a01;
                const double amp = 0.3 + 2.4 * a01;  // motion amplitude from arousal
                cx = std::clamp(cx + rng.uniform(-amp, amp), S / 2.0 - margin_x, S / 2.0 + margin_x);
                cy = std::clamp(cy + rng.uniform(-amp, amp), S / 2.0 - margin_y, S / 2.0 + margin_y);
            } else {
                f.curvature = 0.0;
                f.openness = 0.5;
            }
            f.cx = cx;
            f.cy = cy;

            // Signal mode keeps context constant across clips so that nothing
            // except the face carries class information; the regression data
            // keeps per-clip backgrounds and illumination.
            const double gain =
                cfg.signal_mode ? 1.0 : gain0 * (1.0 + 0.02 * rng.uniform(-1.0, 1.0));
            Image frame(S, S, 3);
            Rng bg_rng(cfg.signal_mode ? Rng::mix(cfg.seed, 0xB6)
                                       : Rng::mix(Rng::mix(cfg.seed, ci), 0xB6));
            render_background(frame, bg_rng, gain);
            render_face(frame, f, gain);
            save_png(frame, clip.frame_path(t));

            FrameAnnotation& ann = clip.annotations[t];
            ann.valence = val[t];
            ann.arousal = aro[t];
            ann.landmarks = face_landmarks(f);
        }
        save_annotations(clip, clip.dir / "annotations.json");
    }

    if (cfg.signal_mode) {
        json j = json::object();
        for (const auto& [id, w] : windows) j[id] = {w.begin, w.end};
        std::ofstream f(out / "signal_windows.json");
        f << j.dump(2) << "\n";
    }
    return load_dataset(out);
}

std::map<std::string, SignalWindow> load_signal_windows(const fs::path& root) {
    std::ifstream in(root / "signal_windows.json");
    if (!in) throw AffectError("no signal_windows.json under " + root.string());
    json j;
    in >> j;
    std::map<std::string, SignalWindow> out;
    for (auto it = j.begin(); it != j.end(); ++it)
        out[it.key()] = {(*it)[0].get<int>(), (*it)[1].get<int>()};
    return out;
}

double measured_mouth_curvature(const FrameAnnotation& a) {
    const auto& lm = a.landmarks;
    double corners = 0.5 * (lm[48].y + lm[54].y);
    double mid = 0.5 * (lm[51].y + lm[57].y);
    double width = std::abs(lm[54].x - lm[48].x);
    if (width < 1e-9) return 0.0;
    return (mid - corners) / width;  // positive for a smile (corners above mid)
}

double measured_eye_openness(const FrameAnnotation& a) {
    const auto& lm = a.landmarks;
    double sep = 0.0, width = 0.0;
    for (int base : {36, 42}) {
        sep += 0.5 * ((lm[base + 5].y - lm[base + 1].y) + (lm[base + 4].y - lm[base + 2].y));
        width += std::abs(lm[base + 3].x - lm[base].x);
    }
    return width < 1e-9 ? 0.0 : sep / width;
}

}  // namespace affect
