#include "affect/metrics.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace affect {

using nlohmann::json;

MetricReport compute_report(const std::vector<std::string>& clip_ids,
                            const std::vector<MatX<double>>& pred_va,
                            const std::vector<MatX<double>>& true_va,
                            double baseline_valence, double baseline_arousal) {
    if (clip_ids.size() != pred_va.size() || clip_ids.size() != true_va.size())
        throw AffectError("compute_report: ragged inputs");
    std::vector<double> pv, tv, pa, ta;
    MetricReport rep;
    for (size_t c = 0; c < clip_ids.size(); ++c) {
        const auto& p = pred_va[c];
        const auto& t = true_va[c];
        if (p.rows() != t.rows() || p.cols() != 2 || t.cols() != 2)
            throw AffectError("compute_report: clip " + clip_ids[c] + " shape mismatch");
        std::vector<double> cpv, ctv, cpa, cta;
        for (int i = 0; i < p.rows(); ++i) {
            cpv.push_back(p(i, 0));
            ctv.push_back(t(i, 0));
            cpa.push_back(p(i, 1));
            cta.push_back(t(i, 1));
        }
        ClipMetrics cm;
        cm.clip_id = clip_ids[c];
        cm.n_frames = static_cast<int>(p.rows());
        cm.ccc_valence = ccc<double>(cpv, ctv, CccMode::loss);
        cm.ccc_arousal = ccc<double>(cpa, cta, CccMode::loss);
        cm.mse_valence = mse<double>(cpv, ctv);
        cm.mse_arousal = mse<double>(cpa, cta);
        rep.per_clip.push_back(cm);
        pv.insert(pv.end(), cpv.begin(), cpv.end());
        tv.insert(tv.end(), ctv.begin(), ctv.end());
        pa.insert(pa.end(), cpa.begin(), cpa.end());
        ta.insert(ta.end(), cta.begin(), cta.end());
    }
    rep.n_frames = static_cast<int>(pv.size());
    rep.ccc_valence = ccc<double>(pv, tv, CccMode::strict);
    rep.ccc_arousal = ccc<double>(pa, ta, CccMode::strict);
    rep.mse_valence = mse<double>(pv, tv);
    rep.mse_arousal = mse<double>(pa, ta);
    rep.baseline_ccc_valence = baseline_valence;
    rep.baseline_ccc_arousal = baseline_arousal;
    return rep;
}

void save_report(const MetricReport& r, const std::filesystem::path& path) {
    json per_clip = json::array();
    for (const auto& c : r.per_clip)
        per_clip.push_back({{"clip_id", c.clip_id},
                            {"ccc_valence", c.ccc_valence},
                            {"ccc_arousal", c.ccc_arousal},
                            {"mse_valence", c.mse_valence},
                            {"mse_arousal", c.mse_arousal},
                            {"n_frames", c.n_frames}});
    json j = {{"ccc_valence", r.ccc_valence},
              {"ccc_arousal", r.ccc_arousal},
              {"mse_valence", r.mse_valence},
              {"mse_arousal", r.mse_arousal},
              {"baseline_ccc_valence", r.baseline_ccc_valence},
              {"baseline_ccc_arousal", r.baseline_ccc_arousal},
              {"n_frames", r.n_frames},
              {"per_clip", per_clip}};
    std::ofstream out(path);
    if (!out) throw AffectError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

MetricReport load_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw AffectError("cannot open " + path.string());
    json j;
    in >> j;
    MetricReport r;
    r.ccc_valence = j.at("ccc_valence").get<double>();
    r.ccc_arousal = j.at("ccc_arousal").get<double>();
    r.mse_valence = j.at("mse_valence").get<double>();
    r.mse_arousal = j.at("mse_arousal").get<double>();
    r.baseline_ccc_valence = j.value("baseline_ccc_valence", 0.0);
    r.baseline_ccc_arousal = j.value("baseline_ccc_arousal", 0.0);
    r.n_frames = j.at("n_frames").get<int>();
    for (const auto& c : j.at("per_clip")) {
        ClipMetrics cm;
        cm.clip_id = c.at("clip_id").get<std::string>();
        cm.ccc_valence = c.at("ccc_valence").get<double>();
        cm.ccc_arousal = c.at("ccc_arousal").get<double>();
        cm.mse_valence = c.at("mse_valence").get<double>();
        cm.mse_arousal = c.at("mse_arousal").get<double>();
        cm.n_frames = c.at("n_frames").get<int>();
        r.per_clip.push_back(cm);
    }
    return r;
}

std::string format_report_table(const MetricReport& r) {
    std::ostringstream os;
    char line[160];
    os << "metric                 valence      arousal\n";
    os << "-------------------------------------------\n";
    std::snprintf(line, sizeof(line), "CCC               %12.4f %12.4f\n", r.ccc_valence,
                  r.ccc_arousal);
    os << line;
    std::snprintf(line, sizeof(line), "MSE               %12.4f %12.4f\n", r.mse_valence,
                  r.mse_arousal);
    os << line;
    std::snprintf(line, sizeof(line), "CCC (mean basel.) %12.4f %12.4f\n",
                  r.baseline_ccc_valence, r.baseline_ccc_arousal);
    os << line;
    os << "frames: " << r.n_frames << ", clips: " << r.per_clip.size() << "\n\n";
    os << "clip                   ccc_v    ccc_a    mse_v    mse_a  frames\n";
    for (const auto& c : r.per_clip) {
        std::snprintf(line, sizeof(line), "%-20s %8.3f %8.3f %8.3f %8.3f %7d\n",
                      c.clip_id.c_str(), c.ccc_valence, c.ccc_arousal, c.mse_valence,
                      c.mse_arousal, c.n_frames);
        os << line;
    }
    return os.str();
}

}  // namespace affect
