#include "hgan/net.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace hgan {

using ojson = nlohmann::ordered_json;

std::string serialize(const ReluNet& net) {
    ojson j;
    j["version"] = 1;
    j["input_dim"] = net.input_dim;
    j["layers"] = ojson::array();
    for (auto& L : net.layers) {
        ojson l;
        l["rows"] = L.rows;
        l["cols"] = L.cols;
        l["weights"] = L.to_dense();
        l["bias"] = L.bias;
        j["layers"].push_back(std::move(l));
    }
    ojson m;
    m["construction_tag"] = net.meta.tag;
    m["claimed_width"] = net.meta.claimed_width;
    m["claimed_depth"] = net.meta.claimed_depth;
    if (net.meta.claimed_lipschitz)
        m["claimed_lipschitz"] = *net.meta.claimed_lipschitz;
    else
        m["claimed_lipschitz"] = "none";
    j["metadata"] = std::move(m);
    return j.dump();
}

namespace {

std::size_t where(const std::string& text, const std::string& key) {
    auto p = text.find("\"" + key + "\"");
    return p == std::string::npos ? 0 : p;
}

} // namespace

ReluNet deserialize(const std::string& text) {
    ojson j;
    try {
        j = ojson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.what(), e.byte);
    }
    auto need = [&](bool ok, const std::string& msg, const std::string& key) {
        if (!ok) throw ParseError(msg, where(text, key));
    };
    need(j.is_object(), "top level must be an object", "");
    need(j.contains("version") && j["version"].is_number_integer() && j["version"] == 1, "unsupported or missing version",
         "version");
    need(j.contains("input_dim") && j["input_dim"].is_number_integer() && j["input_dim"].get<int>() > 0,
         "input_dim must be a positive integer", "input_dim");
    need(j.contains("layers") && j["layers"].is_array() && !j["layers"].empty(), "layers must be a non-empty array",
         "layers");
    ReluNet net;
    net.input_dim = j["input_dim"].get<int>();
    try {
        for (auto& l : j["layers"]) {
            need(l.is_object() && l.contains("rows") && l.contains("cols") && l.contains("weights") && l.contains("bias"),
                 "layer entry missing rows/cols/weights/bias", "layers");
            int r = l["rows"].get<int>(), c = l["cols"].get<int>();
            need(r > 0 && c > 0, "layer dimensions must be positive", "rows");
            auto w = l["weights"].get<std::vector<double>>();
            auto b = l["bias"].get<std::vector<double>>();
            need(static_cast<long long>(w.size()) == static_cast<long long>(r) * c, "weights length != rows*cols", "weights");
            need(static_cast<int>(b.size()) == r, "bias length != rows", "bias");
            net.layers.push_back(AffineLayer::dense(r, c, w, std::move(b)));
        }
        if (j.contains("metadata")) {
            auto& m = j["metadata"];
            net.meta.tag = m.value("construction_tag", std::string());
            net.meta.claimed_width = m.value("claimed_width", 0);
            net.meta.claimed_depth = m.value("claimed_depth", 0);
            if (m.contains("claimed_lipschitz") && m["claimed_lipschitz"].is_number())
                net.meta.claimed_lipschitz = m["claimed_lipschitz"].get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed layer: ") + e.what(), where(text, "layers"));
    }
    try {
        net.validate();
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what(), where(text, "layers"));
    }
    return net;
}

void write_file_atomic(const std::string& path, const std::string& body) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + path);
        f << body;
        if (!f.flush()) throw std::runtime_error("cannot write " + path);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw std::runtime_error("cannot move " + tmp + " to " + path);
}

void save_net(const ReluNet& net, const std::string& path) { write_file_atomic(path, serialize(net) + "\n"); }

ReluNet load_net(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return deserialize(ss.str());
}

} // namespace hgan
