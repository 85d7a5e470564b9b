#include "affect/checkpoint.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>

namespace affect {

using nlohmann::json;

namespace {

constexpr uint32_t kMagic = 0x4146464Bu;  // "AFFK"
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void write_u64(std::ostream& os, uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
uint32_t read_u32(std::istream& is) {
    uint32_t v;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
uint64_t read_u64(std::istream& is) {
    uint64_t v;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

void write_mat(std::ostream& os, const MatX<float>& m) {
    write_u64(os, static_cast<uint64_t>(m.rows()));
    write_u64(os, static_cast<uint64_t>(m.cols()));
    os.write(reinterpret_cast<const char*>(m.data()), sizeof(float) * m.size());
}

MatX<float> read_mat(std::istream& is) {
    const uint64_t rows = read_u64(is), cols = read_u64(is);
    MatX<float> m(rows, cols);
    is.read(reinterpret_cast<char*>(m.data()), sizeof(float) * m.size());
    return m;
}

void write_vec(std::ostream& os, const VecX<float>& v) {
    write_u64(os, static_cast<uint64_t>(v.size()));
    os.write(reinterpret_cast<const char*>(v.data()), sizeof(float) * v.size());
}

VecX<float> read_vec(std::istream& is) {
    const uint64_t n = read_u64(is);
    VecX<float> v(n);
    is.read(reinterpret_cast<char*>(v.data()), sizeof(float) * v.size());
    return v;
}

void write_header(std::ostream& os, const json& j) {
    const std::string s = j.dump();
    write_u64(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

json read_header(std::istream& is, const std::filesystem::path& path) {
    const uint32_t magic = read_u32(is);
    const uint32_t version = read_u32(is);
    if (!is || magic != kMagic)
        throw AffectError("not a checkpoint file: " + path.string());
    if (version != kVersion)
        throw AffectError("incompatible checkpoint version " + std::to_string(version) +
                          " in " + path.string());
    const uint64_t len = read_u64(is);
    std::string s(len, '\0');
    is.read(s.data(), static_cast<std::streamsize>(len));
    return json::parse(s);
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw AffectError("cannot write checkpoint " + path.string());
    return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw AffectError("cannot open checkpoint " + path.string());
    return is;
}

}  // namespace

void save_selector_checkpoint(const std::filesystem::path& path, Selector<float>& sel) {
    auto os = open_out(path);
    write_u32(os, kMagic);
    write_u32(os, kVersion);
    const auto& c = sel.config();
    write_header(os, json{{"kind", "selector"},
                          {"channels", c.channels},
                          {"r_heads", c.r_heads},
                          {"attn_hidden", c.attn_hidden},
                          {"seed", c.seed}});
    auto params = sel.parameters();
    write_u64(os, params.size());
    for (auto* p : params) write_mat(os, p->value);
}

Selector<float> load_selector_checkpoint(const std::filesystem::path& path) {
    auto is = open_in(path);
    json h = read_header(is, path);
    if (h.at("kind") != "selector") throw AffectError("not a selector checkpoint: " + path.string());
    SelectorConfig<float> cfg;
    auto ch = h.at("channels").get<std::vector<int>>();
    std::copy_n(ch.begin(), 4, cfg.channels.begin());
    cfg.r_heads = h.at("r_heads").get<int>();
    cfg.attn_hidden = h.at("attn_hidden").get<int>();
    cfg.seed = h.at("seed").get<uint64_t>();
    Selector<float> sel(cfg);
    auto params = sel.parameters();
    if (read_u64(is) != params.size())
        throw AffectError("checkpoint parameter count mismatch: " + path.string());
    for (auto* p : params) {
        MatX<float> m = read_mat(is);
        if (m.rows() != p->value.rows() || m.cols() != p->value.cols())
            throw AffectError("checkpoint tensor shape mismatch: " + path.string());
        p->value = std::move(m);
    }
    if (!is) throw AffectError("truncated checkpoint: " + path.string());
    return sel;
}

void save_model_checkpoint(const std::filesystem::path& path, AffectNet<float>& net,
                           const TrainState& state, const nn::Adam<float>& opt) {
    auto os = open_out(path);
    write_u32(os, kMagic);
    write_u32(os, kVersion);
    const auto& c = net.config();
    write_header(os, json{{"kind", "model"},
                          {"channels", c.channels},
                          {"dropout", c.dropout},
                          {"f_bank", c.f_bank},
                          {"n_gauss", c.n_gauss},
                          {"fc", c.fc},
                          {"seed", net.seed()},
                          {"epochs_done", state.epochs_done},
                          {"lr", state.lr},
                          {"best_val", state.best_val},
                          {"stall_epochs", state.stall_epochs},
                          {"adam_t", opt.t}});
    auto params = net.parameters();
    write_u64(os, params.size());
    for (auto* p : params) write_mat(os, p->value);
    auto norms = net.norm_state();
    write_u64(os, norms.size());
    for (auto* v : norms) write_vec(os, *v);
    write_u64(os, opt.m.size());
    for (size_t i = 0; i < opt.m.size(); ++i) {
        write_mat(os, opt.m[i]);
        write_mat(os, opt.v[i]);
    }
}

LoadedModel load_model_checkpoint(const std::filesystem::path& path) {
    auto is = open_in(path);
    json h = read_header(is, path);
    if (h.at("kind") != "model") throw AffectError("not a model checkpoint: " + path.string());
    ModelConfig<float> cfg;
    auto ch = h.at("channels").get<std::vector<int>>();
    std::copy_n(ch.begin(), 5, cfg.channels.begin());
    cfg.dropout = h.at("dropout").get<double>();
    cfg.f_bank = h.at("f_bank").get<int>();
    cfg.n_gauss = h.at("n_gauss").get<int>();
    auto fc = h.at("fc").get<std::vector<int>>();
    std::copy_n(fc.begin(), 2, cfg.fc.begin());

    LoadedModel out{AffectNet<float>(cfg, h.at("seed").get<uint64_t>()), TrainState{},
                    nn::Adam<float>()};
    out.state.epochs_done = h.at("epochs_done").get<int>();
    out.state.lr = h.at("lr").get<double>();
    out.state.best_val = h.at("best_val").get<double>();
    out.state.stall_epochs = h.at("stall_epochs").get<int>();

    auto params = out.net.parameters();
    if (read_u64(is) != params.size())
        throw AffectError("checkpoint parameter count mismatch: " + path.string());
    for (auto* p : params) {
        MatX<float> m = read_mat(is);
        if (m.rows() != p->value.rows() || m.cols() != p->value.cols())
            throw AffectError("checkpoint tensor shape mismatch: " + path.string());
        p->value = std::move(m);
    }
    auto norms = out.net.norm_state();
    if (read_u64(is) != norms.size())
        throw AffectError("checkpoint norm-state mismatch: " + path.string());
    for (auto* v : norms) *v = read_vec(is);
    out.opt.lr = static_cast<float>(out.state.lr);
    out.opt.t = h.at("adam_t").get<int64_t>();
    const uint64_t n_opt = read_u64(is);
    for (uint64_t i = 0; i < n_opt; ++i) {
        out.opt.m.push_back(read_mat(is));
        out.opt.v.push_back(read_mat(is));
    }
    if (!is) throw AffectError("truncated checkpoint: " + path.string());
    return out;
}

}  // namespace affect
