#include "stsr/bundle.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "stsr/tensorfile.hpp"

namespace stsr {

namespace fs = std::filesystem;
using nlohmann::json;

FeatureBundle load_feature_bundle(const std::string& dir) {
    const fs::path root(dir);
    const fs::path manifest_path = root / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("bundle: missing manifest " + manifest_path.string());
    json manifest = json::parse(in);

    for (const char* key : {"z", "labels", "w_l", "b_l", "d", "N"})
        if (!manifest.contains(key))
            throw std::runtime_error(std::string("bundle: manifest missing key '") + key + "'");

    FeatureBundle b;
    b.source = manifest.value("source", "");
    const std::size_t d = manifest.at("d").get<std::size_t>();
    const std::size_t n = manifest.at("N").get<std::size_t>();

    b.z = read_tensor_file((root / manifest.at("z").get<std::string>()).string());
    Tensor labels = read_tensor_file((root / manifest.at("labels").get<std::string>()).string());
    b.head.w_l = read_tensor_file((root / manifest.at("w_l").get<std::string>()).string());
    b.head.b_l = read_tensor_file((root / manifest.at("b_l").get<std::string>()).string());

    if (b.z.ndim() != 2 || b.z.cols() != d)
        throw std::runtime_error("bundle: z has dims " + shape_to_string(b.z.shape) +
                                 ", expected Mx" + std::to_string(d));
    if (b.head.w_l.ndim() != 2 || b.head.w_l.rows() != d || b.head.w_l.cols() != n)
        throw std::runtime_error("bundle: w_l has dims " + shape_to_string(b.head.w_l.shape) +
                                 ", expected " + std::to_string(d) + "x" + std::to_string(n));
    if (b.head.b_l.size() != n)
        throw std::runtime_error("bundle: b_l has dims " + shape_to_string(b.head.b_l.shape) +
                                 ", expected " + std::to_string(n));
    if (labels.size() != b.z.rows())
        throw std::runtime_error("bundle: labels length " + std::to_string(labels.size()) +
                                 " != feature rows " + std::to_string(b.z.rows()));
    b.labels.reserve(labels.size());
    for (double v : labels.data) {
        const long lbl = static_cast<long>(v);
        if (lbl < 1 || static_cast<std::size_t>(lbl) > n)
            throw std::runtime_error("bundle: label " + std::to_string(lbl) +
                                     " outside [1," + std::to_string(n) + "]");
        b.labels.push_back(static_cast<std::size_t>(lbl - 1));
    }
    return b;
}

void save_feature_bundle(const FeatureBundle& bundle, const std::string& dir) {
    const fs::path root(dir);
    fs::create_directories(root);
    write_tensor_file((root / "z.stsr").string(), bundle.z);
    write_tensor_file((root / "w_l.stsr").string(), bundle.head.w_l);
    write_tensor_file((root / "b_l.stsr").string(), bundle.head.b_l);
    Tensor labels({bundle.labels.size()});
    for (std::size_t i = 0; i < bundle.labels.size(); ++i)
        labels(i) = static_cast<double>(bundle.labels[i] + 1);
    write_tensor_file((root / "labels.stsr").string(), labels);

    json manifest = {{"z", "z.stsr"},
                     {"labels", "labels.stsr"},
                     {"w_l", "w_l.stsr"},
                     {"b_l", "b_l.stsr"},
                     {"d", bundle.head.feat_dim()},
                     {"N", bundle.head.n_classes()},
                     {"source", bundle.source}};
    std::ofstream out(root / "manifest.json");
    out << manifest.dump(2) << "\n";
    if (!out) throw std::runtime_error("bundle: cannot write manifest under " + dir);
}

std::vector<PairRecord> load_manifest(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("manifest: cannot open " + csv_path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("manifest: empty file " + csv_path);
    // Tolerate trailing CR from CRLF files.
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const bool has_std = line == "ref_path,dist_path,mos,mos_std";
    if (!has_std && line != "ref_path,dist_path,mos")
        throw std::runtime_error("manifest: bad header '" + line + "'");

    std::vector<PairRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        PairRecord rec;
        std::string mos_field, std_field;
        if (!std::getline(ss, rec.ref_path, ',') || !std::getline(ss, rec.dist_path, ',') ||
            !std::getline(ss, mos_field, ','))
            throw std::runtime_error("manifest: malformed row at line " + std::to_string(line_no));
        rec.mos = std::stod(mos_field);
        if (has_std && std::getline(ss, std_field, ',') && !std_field.empty())
            rec.mos_std = std::stod(std_field);
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace stsr
