#include "affect/pipeline.hpp"

#include <json.hpp>

#include <fstream>

namespace affect {

using nlohmann::json;

namespace {

json config_to_json(const RunConfig& c) {
    return json{
        {"out", c.out.string()},
        {"dataset_root", c.dataset_root},
        {"cache_root", c.cache_root},
        {"seed", c.seed},
        {"threads", c.threads},
        {"synth",
         {{"n_clips", c.synth.n_clips},
          {"frames_min", c.synth.frames_min},
          {"frames_max", c.synth.frames_max},
          {"image_size", c.synth.image_size},
          {"signal_mode", c.synth.signal_mode},
          {"signal_fraction", c.synth.signal_fraction}}},
        {"split", {{"test_fraction", c.split.test_fraction}}},
        {"preprocess",
         {{"face_margin", c.preprocess.face_margin},
          {"clip_limit", c.preprocess.clip_limit},
          {"tile_rows", c.preprocess.tile_rows},
          {"tile_cols", c.preprocess.tile_cols}}},
        {"selector",
         {{"channels", c.selector.channels},
          {"r_heads", c.selector.r_heads},
          {"attn_hidden", c.selector.attn_hidden},
          {"epochs", c.selector.epochs},
          {"lr", c.selector.lr}}},
        {"flow",
         {{"alpha", c.flow.alpha},
          {"max_iters", c.flow.max_iters},
          {"eps", c.flow.eps},
          {"max_mag", c.flow.max_mag}}},
        {"model",
         {{"channels", c.model.channels},
          {"dropout", c.model.dropout},
          {"f_bank", c.model.f_bank},
          {"n_gauss", c.model.n_gauss},
          {"fc", c.model.fc}}},
        {"optim",
         {{"lr", c.optim.lr},
          {"batch_size", c.optim.batch_size},
          {"epochs", c.optim.epochs},
          {"scheduler_factor", c.optim.scheduler_factor},
          {"scheduler_patience", c.optim.scheduler_patience},
          {"val_fraction", c.optim.val_fraction}}}};
}

void config_from_json(const json& j, RunConfig& c) {
    c.out = j.at("out").get<std::string>();
    c.dataset_root = j.at("dataset_root").get<std::string>();
    c.cache_root = j.at("cache_root").get<std::string>();
    c.seed = j.at("seed").get<uint64_t>();
    c.threads = j.at("threads").get<int>();
    const auto& s = j.at("synth");
    c.synth = {s.at("n_clips").get<int>(),      s.at("frames_min").get<int>(),
               s.at("frames_max").get<int>(),   s.at("image_size").get<int>(),
               s.at("signal_mode").get<bool>(), s.at("signal_fraction").get<double>()};
    c.split.test_fraction = j.at("split").at("test_fraction").get<double>();
    const auto& p = j.at("preprocess");
    c.preprocess = {p.at("face_margin").get<double>(), p.at("clip_limit").get<double>(),
                    p.at("tile_rows").get<int>(), p.at("tile_cols").get<int>()};
    const auto& sel = j.at("selector");
    c.selector = {sel.at("channels").get<std::vector<int>>(), sel.at("r_heads").get<int>(),
                  sel.at("attn_hidden").get<int>(), sel.at("epochs").get<int>(),
                  sel.at("lr").get<double>()};
    const auto& f = j.at("flow");
    c.flow = {f.at("alpha").get<double>(), f.at("max_iters").get<int>(), f.at("eps").get<double>(),
              f.at("max_mag").get<double>()};
    const auto& m = j.at("model");
    c.model = {m.at("channels").get<std::vector<int>>(), m.at("dropout").get<double>(),
               m.at("f_bank").get<int>(), m.at("n_gauss").get<int>(),
               m.at("fc").get<std::vector<int>>()};
    const auto& o = j.at("optim");
    c.optim = {o.at("lr").get<double>(),
               o.at("batch_size").get<int>(),
               o.at("epochs").get<int>(),
               o.at("scheduler_factor").get<double>(),
               o.at("scheduler_patience").get<int>(),
               o.at("val_fraction").get<double>()};
}

void merge_validated(json& base, const json& patch, const std::string& prefix) {
    if (!patch.is_object())
        throw AffectError("config section '" + (prefix.empty() ? "<root>" : prefix) +
                          "' must be an object");
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!base.contains(it.key())) throw AffectError("unknown config key: " + path);
        if (base[it.key()].is_object())
            merge_validated(base[it.key()], it.value(), path);
        else
            base[it.key()] = it.value();
    }
}

}  // namespace

void RunConfig::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0)) throw AffectError(std::string("config: ") + name + " must be positive");
    };
    if (synth.n_clips < 1) throw AffectError("config: synth.n_clips must be >= 1");
    if (synth.frames_min < 8 || synth.frames_max > 200 || synth.frames_min > synth.frames_max)
        throw AffectError("config: synth frame range must lie within [8, 200]");
    if (synth.image_size < 64) throw AffectError("config: synth.image_size must be >= 64");
    if (!(synth.signal_fraction > 0.0 && synth.signal_fraction <= 1.0))
        throw AffectError("config: synth.signal_fraction must lie in (0,1]");
    if (!(split.test_fraction > 0.0 && split.test_fraction < 1.0))
        throw AffectError("config: split.test_fraction must lie in (0,1)");
    positive(preprocess.face_margin + 1.0, "preprocess.face_margin + 1");
    if (preprocess.clip_limit < 1.0) throw AffectError("config: preprocess.clip_limit must be >= 1");
    if (preprocess.tile_rows < 1 || preprocess.tile_cols < 1)
        throw AffectError("config: preprocess tile grid must be >= 1");
    if (selector.channels.size() != 4)
        throw AffectError("config: selector.channels needs exactly 4 entries");
    if (selector.r_heads < 1 || selector.attn_hidden < 1 || selector.epochs < 1)
        throw AffectError("config: selector sizes must be >= 1");
    positive(selector.lr, "selector.lr");
    positive(flow.alpha, "flow.alpha");
    if (flow.max_iters < 1) throw AffectError("config: flow.max_iters must be >= 1");
    if (flow.eps < 0) throw AffectError("config: flow.eps must be >= 0");
    positive(flow.max_mag, "flow.max_mag");
    if (model.channels.size() != 5)
        throw AffectError("config: model.channels needs exactly 5 entries");
    if (model.fc.size() != 2) throw AffectError("config: model.fc needs exactly 2 entries");
    if (model.dropout < 0.0 || model.dropout >= 1.0)
        throw AffectError("config: model.dropout must lie in [0,1)");
    if (model.f_bank < 1 || model.n_gauss < 1)
        throw AffectError("config: model filter bank sizes must be >= 1");
    positive(optim.lr, "optim.lr");
    if (optim.batch_size < 1) throw AffectError("config: optim.batch_size must be >= 1");
    if (optim.epochs < 1) throw AffectError("config: optim.epochs must be >= 1");
    if (!(optim.scheduler_factor > 0.0 && optim.scheduler_factor < 1.0))
        throw AffectError("config: optim.scheduler_factor must lie in (0,1)");
    if (optim.scheduler_patience < 1)
        throw AffectError("config: optim.scheduler_patience must be >= 1");
    if (optim.val_fraction < 0.0 || optim.val_fraction >= 1.0)
        throw AffectError("config: optim.val_fraction must lie in [0,1)");
    if (threads < 0) throw AffectError("config: threads must be >= 0");
}

RunConfig load_run_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw AffectError("cannot open config " + file.string());
    json patch;
    try {
        in >> patch;
    } catch (const json::exception& e) {
        throw AffectError("bad config JSON: " + std::string(e.what()));
    }
    RunConfig cfg;
    json base = config_to_json(cfg);
    merge_validated(base, patch, "");
    config_from_json(base, cfg);
    cfg.validate();
    return cfg;
}

void apply_override(RunConfig& cfg, const std::string& key_value) {
    const auto pos = key_value.find('=');
    if (pos == std::string::npos || pos == 0)
        throw AffectError("--set expects key=value, got: " + key_value);
    const std::string key = key_value.substr(0, pos);
    const std::string raw = key_value.substr(pos + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::exception&) {
        value = raw;  // bare strings are allowed unquoted
    }
    // Build a nested single-key patch from the dotted path.
    std::vector<std::string> parts;
    size_t start = 0;
    while (true) {
        const size_t dot = key.find('.', start);
        parts.push_back(key.substr(start, dot - start));
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    json patch = value;
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
    json base = config_to_json(cfg);
    merge_validated(base, patch, "");
    config_from_json(base, cfg);
    cfg.validate();
}

void save_run_config(const RunConfig& cfg, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw AffectError("cannot write config " + file.string());
    out << config_to_json(cfg).dump(2) << "\n";
}

void save_keyframes(const KeyframeManifest& m, const std::filesystem::path& path) {
    json j = {{"clip_id", m.clip_id}, {"selected", m.selected}, {"marginal", m.marginal}};
    std::ofstream out(path);
    if (!out) throw AffectError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

KeyframeManifest load_keyframes(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw AffectError("cannot open " + path.string());
    json j;
    in >> j;
    KeyframeManifest m;
    m.clip_id = j.at("clip_id").get<std::string>();
    m.selected = j.at("selected").get<std::vector<int>>();
    m.marginal = j.at("marginal").get<std::vector<double>>();
    return m;
}

}  // namespace affect
