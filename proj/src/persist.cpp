#include "stsr/persist.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "stsr/tensorfile.hpp"

namespace stsr {

namespace fs = std::filesystem;
using nlohmann::json;

void save_perception(const PerceptionNet& net, const std::string& dir) {
    const fs::path root(dir);
    fs::create_directories(root);
    write_tensor_file((root / "w1.stsr").string(), net.w1);
    write_tensor_file((root / "b1.stsr").string(), net.b1);
    write_tensor_file((root / "w_l.stsr").string(), net.head.w_l);
    write_tensor_file((root / "b_l.stsr").string(), net.head.b_l);
    json sidecar = {{"kind", "perception"},
                    {"input_dim", net.input_dim()},
                    {"feat_dim", net.feat_dim()},
                    {"n_classes", net.n_classes()}};
    std::ofstream out(root / "net.json");
    out << sidecar.dump(2) << "\n";
    if (!out) throw std::runtime_error("save_perception: cannot write sidecar under " + dir);
}

PerceptionNet load_perception(const std::string& dir) {
    const fs::path root(dir);
    if (!fs::exists(root / "net.json"))
        throw std::runtime_error("load_perception: missing net.json in " + dir);
    PerceptionNet net;
    net.w1 = read_tensor_file((root / "w1.stsr").string());
    net.b1 = read_tensor_file((root / "b1.stsr").string());
    net.head.w_l = read_tensor_file((root / "w_l.stsr").string());
    net.head.b_l = read_tensor_file((root / "b_l.stsr").string());
    net.head.validate();
    if (net.w1.ndim() != 2 || net.w1.cols() != net.head.feat_dim())
        throw std::runtime_error("load_perception: penultimate width mismatch in " + dir);
    return net;
}

void save_head(const MlpHead& head, const NormStats& stats, const std::string& dir) {
    const fs::path root(dir);
    fs::create_directories(root);
    write_tensor_file((root / "w1.stsr").string(), head.w1);
    write_tensor_file((root / "b1.stsr").string(), head.b1);
    write_tensor_file((root / "w2.stsr").string(), head.w2);
    write_tensor_file((root / "b2.stsr").string(), head.b2);
    write_tensor_file((root / "w3.stsr").string(), head.w3);
    write_tensor_file((root / "b3.stsr").string(), head.b3);
    write_tensor_file((root / "norm_mean.stsr").string(), stats.mean);
    write_tensor_file((root / "norm_std.stsr").string(), stats.std);
    json sidecar = {{"kind", "mlp_head"},
                    {"input_dim", head.input_dim()},
                    {"n_classes", head.n_classes()},
                    {"norm", stats.kind == NormKind::ZScore ? "zscore" : "minmax"}};
    std::ofstream out(root / "head.json");
    out << sidecar.dump(2) << "\n";
    if (!out) throw std::runtime_error("save_head: cannot write sidecar under " + dir);
}

void load_head(const std::string& dir, MlpHead& head, NormStats& stats) {
    const fs::path root(dir);
    std::ifstream in(root / "head.json");
    if (!in) throw std::runtime_error("load_head: missing head.json in " + dir);
    json sidecar = json::parse(in);
    head.w1 = read_tensor_file((root / "w1.stsr").string());
    head.b1 = read_tensor_file((root / "b1.stsr").string());
    head.w2 = read_tensor_file((root / "w2.stsr").string());
    head.b2 = read_tensor_file((root / "b2.stsr").string());
    head.w3 = read_tensor_file((root / "w3.stsr").string());
    head.b3 = read_tensor_file((root / "b3.stsr").string());
    stats.mean = read_tensor_file((root / "norm_mean.stsr").string());
    stats.std = read_tensor_file((root / "norm_std.stsr").string());
    stats.kind = sidecar.value("norm", "zscore") == "minmax" ? NormKind::MinMax : NormKind::ZScore;
    if (stats.mean.size() != head.input_dim())
        throw std::runtime_error("load_head: norm stats width mismatch in " + dir);
}

}  // namespace stsr
