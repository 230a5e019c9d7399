#include "ttf/serialize.hpp"

#include "ttf/error.hpp"
#include "ttf/hash.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace ttf {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const char* what) {
    if (!j.is_object()) throw Error(ErrorCode::invalid_config, std::string(what) + " must be an object");
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw Error(ErrorCode::invalid_config, std::string("unknown key '") + key + "' in " + what);
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_config, std::string("bad value for '") + key + "': " + e.what());
    }
}

std::string hex_real(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
    if (ec != std::errc{}) throw Error(ErrorCode::internal, "cannot format tensor value");
    return std::string(buf, ptr);
}

double parse_hex_real(std::string_view text) {
    double v = 0.0;
    std::string_view body = text;
    bool negative = false;
    if (!body.empty() && body.front() == '-') {
        negative = true;
        body.remove_prefix(1);
    }
    if (body == "inf" || body == "nan") throw Error(ErrorCode::parse_error, "non-finite tensor value");
    auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v, std::chars_format::hex);
    if (ec != std::errc{} || ptr != body.data() + body.size())
        throw Error(ErrorCode::parse_error, "bad tensor value '" + std::string(text) + "'");
    return negative ? -v : v;
}

std::string tensor_block(const Tensor& t) {
    std::string out = "tensor " + t.name + " " + std::to_string(t.value.rows()) + " " + std::to_string(t.value.cols()) + "\n";
    for (Eigen::Index r = 0; r < t.value.rows(); ++r) {
        for (Eigen::Index c = 0; c < t.value.cols(); ++c) {
            if (c) out += ' ';
            out += hex_real(t.value(r, c));
        }
        out += '\n';
    }
    return out;
}

std::string artifact_body(const MtFusionNet& model) {
    std::string out = "TTF-MODEL 1\n";
    out += "config " + to_json(model.config()).dump() + "\n";
    out += "tensors " + std::to_string(model.parameters().size()) + "\n";
    for (const auto& t : model.parameters()) out += tensor_block(t);
    return out;
}

} // namespace

json to_json(const WindowSpec& spec) { return json{{"m", spec.m}, {"n", spec.n}, {"k", spec.k}, {"s", spec.s}}; }

WindowSpec window_spec_from_json(const json& j) {
    reject_unknown(j, {"m", "n", "k", "s"}, "window");
    WindowSpec spec;
    read_opt(j, "m", spec.m);
    read_opt(j, "n", spec.n);
    read_opt(j, "k", spec.k);
    read_opt(j, "s", spec.s);
    spec.validate();
    return spec;
}

json to_json(const ModelConfig& c) {
    return json{
        {"window", to_json(c.spec)},
        {"scales", c.scales},
        {"backbone", std::string(to_string(c.backbone))},
        {"hparams",
         {{"hidden", c.hparams.hidden},
          {"blocks", c.hparams.blocks},
          {"dropout", c.hparams.dropout},
          {"activation", std::string(to_string(c.hparams.activation))},
          {"decomposition_kernel", c.hparams.decomposition_kernel}}},
        {"static_width", c.static_width},
        {"dynamic_width", c.dynamic_width},
        {"static_channels", c.static_channels},
        {"fusion_hidden", c.fusion_hidden},
        {"positional_encoding", c.positional_encoding},
        {"seed", c.seed},
    };
}

ModelConfig model_config_from_json(const json& j) {
    reject_unknown(j,
                   {"window", "scales", "backbone", "hparams", "static_width", "dynamic_width", "static_channels",
                    "fusion_hidden", "positional_encoding", "seed"},
                   "model config");
    ModelConfig c;
    if (j.contains("window")) c.spec = window_spec_from_json(j.at("window"));
    read_opt(j, "scales", c.scales);
    if (j.contains("backbone")) c.backbone = parse_backbone_kind(j.at("backbone").get<std::string>());
    if (j.contains("hparams")) {
        const json& h = j.at("hparams");
        reject_unknown(h, {"hidden", "blocks", "dropout", "activation", "decomposition_kernel"}, "hparams");
        read_opt(h, "hidden", c.hparams.hidden);
        read_opt(h, "blocks", c.hparams.blocks);
        read_opt(h, "dropout", c.hparams.dropout);
        read_opt(h, "decomposition_kernel", c.hparams.decomposition_kernel);
        if (h.contains("activation")) c.hparams.activation = parse_activation(h.at("activation").get<std::string>());
    }
    read_opt(j, "static_width", c.static_width);
    read_opt(j, "dynamic_width", c.dynamic_width);
    read_opt(j, "static_channels", c.static_channels);
    read_opt(j, "fusion_hidden", c.fusion_hidden);
    read_opt(j, "positional_encoding", c.positional_encoding);
    read_opt(j, "seed", c.seed);
    c.validate();
    return c;
}

std::string serialize_model(const MtFusionNet& model) {
    std::string body = artifact_body(model);
    body += "sha256 " + sha256_hex(body) + "\n";
    return body;
}

MtFusionNet deserialize_model(std::string_view artifact) {
    const std::size_t tag = artifact.rfind("sha256 ");
    if (tag == std::string_view::npos) throw Error(ErrorCode::parse_error, "model artifact has no digest");
    const std::string_view body = artifact.substr(0, tag);
    std::string_view digest = artifact.substr(tag + 7);
    while (!digest.empty() && (digest.back() == '\n' || digest.back() == '\r')) digest.remove_suffix(1);
    if (sha256_hex(body) != digest) throw Error(ErrorCode::parse_error, "model artifact digest mismatch");

    std::istringstream in{std::string(body)};
    std::string line;
    if (!std::getline(in, line) || line != "TTF-MODEL 1") throw Error(ErrorCode::parse_error, "not a TTF model artifact");
    if (!std::getline(in, line) || line.rfind("config ", 0) != 0) throw Error(ErrorCode::parse_error, "missing config line");
    ModelConfig config;
    try {
        config = model_config_from_json(json::parse(line.substr(7)));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse_error, std::string("bad model config: ") + e.what());
    }
    std::size_t count = 0;
    if (!std::getline(in, line) || std::sscanf(line.c_str(), "tensors %zu", &count) != 1)
        throw Error(ErrorCode::parse_error, "missing tensor count");

    std::vector<Tensor> tensors;
    tensors.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(in, line)) throw Error(ErrorCode::parse_error, "truncated tensor list");
        std::istringstream header(line);
        std::string word, name;
        long rows = -1, cols = -1;
        if (!(header >> word >> name >> rows >> cols) || word != "tensor" || rows < 0 || cols < 0)
            throw Error(ErrorCode::parse_error, "bad tensor header '" + line + "'");
        Tensor t{name, Matrix(rows, cols)};
        for (long r = 0; r < rows; ++r) {
            if (!std::getline(in, line)) throw Error(ErrorCode::parse_error, "truncated tensor " + name);
            std::istringstream row(line);
            std::string cell;
            for (long c = 0; c < cols; ++c) {
                if (!(row >> cell)) throw Error(ErrorCode::parse_error, "short row in tensor " + name);
                t.value(r, c) = parse_hex_real(cell);
            }
        }
        tensors.push_back(std::move(t));
    }
    return MtFusionNet(std::move(config), std::move(tensors));
}

std::string model_version(const MtFusionNet& model) { return sha256_hex(artifact_body(model)).substr(0, kVersionIdLength); }

std::string parameter_hash(const MtFusionNet& model) {
    std::string all;
    for (const auto& t : model.parameters()) all += tensor_block(t);
    return sha256_hex(all);
}

void save_model(const MtFusionNet& model, const std::filesystem::path& path) { write_file_atomic(path, serialize_model(model)); }

MtFusionNet load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::io_error, "cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) throw Error(ErrorCode::io_error, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::io_error, "rename to " + path.string() + " failed: " + ec.message());
}

} // namespace ttf
