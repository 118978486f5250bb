#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "stsr/bundle.hpp"
#include "stsr/dataset.hpp"
#include "stsr/distort.hpp"
#include "stsr/features.hpp"
#include "stsr/head.hpp"
#include "stsr/iqa.hpp"
#include "stsr/metrics.hpp"
#include "stsr/persist.hpp"
#include "stsr/ppm.hpp"
#include "stsr/rng.hpp"
#include "stsr/sae.hpp"
#include "stsr/tensorfile.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stsr;

namespace {

// ---------------------------------------------------------------------------
// small shared helpers

std::size_t worker_count() {
    if (const char* env = std::getenv("SURPRISAL_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<std::size_t>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min(worker_count(), std::max<std::size_t>(n, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) fn(i);
        });
    for (auto& t : pool) t.join();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

// Every artifact-producing command drops its fully resolved parameters next
// to the output so the run is reproducible from the echo alone.
void write_config_echo(const fs::path& out_dir, const std::string& command, json params) {
    params["command"] = command;
    params["threads"] = worker_count();
    fs::create_directories(out_dir);
    std::ofstream out(out_dir / "config.json");
    out << params.dump(2) << "\n";
    if (!out) throw std::runtime_error("cannot write config echo under " + out_dir.string());
}

std::vector<Tensor> load_ppm_dir(const std::string& dir) {
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".ppm")
            names.push_back(entry.path().string());
    std::sort(names.begin(), names.end());
    if (names.empty()) throw std::runtime_error("no .ppm images in " + dir);
    std::vector<Tensor> images;
    images.reserve(names.size());
    for (const auto& n : names) images.push_back(read_ppm(n));
    return images;
}

struct DatasetOnDisk {
    Tensor train_x, test_x;                  // rows of flattened pixels
    std::vector<std::size_t> train_y, test_y;  // 0-based
    std::size_t side = 32, channels = 3, classes = 10;
};

std::vector<std::size_t> labels_from_tensor(const Tensor& t) {
    std::vector<std::size_t> out(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double v = t(i);
        if (v < 1.0 || v != std::floor(v))
            throw std::runtime_error("label file holds a non 1-based integer: " + fmt(v));
        out[i] = static_cast<std::size_t>(v) - 1;
    }
    return out;
}

Tensor labels_to_tensor(const std::vector<std::size_t>& labels) {
    Tensor t({labels.size()});
    for (std::size_t i = 0; i < labels.size(); ++i) t(i) = static_cast<double>(labels[i] + 1);
    return t;
}

DatasetOnDisk load_dataset_dir(const std::string& dir) {
    const fs::path root(dir);
    std::ifstream in(root / "meta.json");
    if (!in) throw std::runtime_error("missing meta.json in " + dir);
    json meta = json::parse(in);
    DatasetOnDisk d;
    d.side = meta.value("side", 32);
    d.channels = meta.value("channels", 3);
    d.classes = meta.value("classes", 10);
    d.train_x = read_tensor_file((root / "train_images.stsr").string());
    d.test_x = read_tensor_file((root / "test_images.stsr").string());
    d.train_y = labels_from_tensor(read_tensor_file((root / "train_labels.stsr").string()));
    d.test_y = labels_from_tensor(read_tensor_file((root / "test_labels.stsr").string()));
    return d;
}

Tensor row_as_image(const Tensor& rows, std::size_t i, std::size_t side, std::size_t channels) {
    Tensor img({side, side, channels});
    for (std::size_t j = 0; j < img.size(); ++j) img.data[j] = rows(i, j);
    return img;
}

Tensor row_as_vector(const Tensor& rows, std::size_t i) {
    Tensor v({rows.cols()});
    for (std::size_t j = 0; j < v.size(); ++j) v(j) = rows(i, j);
    return v;
}

// r_x rows for a whole feature matrix, normalized when stats are present.
Tensor rx_matrix(const PerceptionHead& head, const Tensor& z_rows, const NormStats* stats) {
    const std::size_t n = z_rows.rows();
    const std::size_t width = head.feat_dim() * head.n_classes();
    Tensor rows({n, width});
    parallel_for(n, [&](std::size_t i) {
        SurprisalFeature f = extract_rx(head, row_as_vector(z_rows, i));
        Tensor r = stats ? apply_norm(f.r, *stats) : f.r;
        for (std::size_t j = 0; j < width; ++j) rows(i, j) = r(j);
    });
    return rows;
}

void write_scatter_svg(const fs::path& path, const std::vector<double>& score,
                       const std::vector<double>& mos, const LogisticFit& fit,
                       const std::string& title) {
    const double w = 640, h = 480, pad = 50;
    auto minmax = [](const std::vector<double>& v) {
        double lo = v[0], hi = v[0];
        for (double x : v) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        if (hi <= lo) hi = lo + 1.0;
        return std::pair<double, double>{lo, hi};
    };
    const auto [sx0, sx1] = minmax(score);
    const auto [sy0, sy1] = minmax(mos);
    auto px = [&](double s) { return pad + (s - sx0) / (sx1 - sx0) * (w - 2 * pad); };
    auto py = [&](double m) { return h - pad - (m - sy0) / (sy1 - sy0) * (h - 2 * pad); };

    std::ofstream out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\">" << title << "</text>\n";
    for (std::size_t i = 0; i < score.size(); ++i)
        out << "<circle cx=\"" << fmt(px(score[i])) << "\" cy=\"" << fmt(py(mos[i]))
            << "\" r=\"3\" fill=\"steelblue\" fill-opacity=\"0.7\"/>\n";
    out << "<polyline fill=\"none\" stroke=\"crimson\" stroke-width=\"2\" points=\"";
    const auto& b = fit.params;
    for (int k = 0; k <= 100; ++k) {
        const double s = sx0 + (sx1 - sx0) * k / 100.0;
        const double q = (b[0] - b[1]) / (1.0 + std::exp(-(s - b[2]) / std::fabs(b[3]))) + b[1];
        out << fmt(px(s)) << "," << fmt(py(std::clamp(q, sy0, sy1))) << " ";
    }
    out << "\"/>\n</svg>\n";
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

// ---------------------------------------------------------------------------
// gradcheck suites

struct GradcheckResult {
    std::size_t cases = 0;
    std::size_t failures = 0;
    double worst = 0.0;
};

GradcheckResult gradcheck_discriminative(std::size_t cases, Rng& rng) {
    GradcheckResult res;
    for (std::size_t c = 0; c < cases; ++c) {
        const std::size_t d = 2 + rng.uniform_int(7);  // <= 8
        const std::size_t n = 2 + rng.uniform_int(4);  // <= 5
        PerceptionHead head;
        head.w_l = Tensor({d, n});
        head.b_l = Tensor({n});
        for (double& v : head.w_l.data) v = rng.uniform(-1.0, 1.0);
        for (double& v : head.b_l.data) v = rng.uniform(-0.5, 0.5);
        Tensor z({d});
        for (double& v : z.data) v = rng.uniform(-1.0, 1.0);

        const std::size_t act = rng.uniform_int(n);
        const std::size_t row = rng.uniform_int(d);
        Tensor y = logits(head, z);
        const double analytic = grad_filter(z, y, act)(row);

        const double step = 1e-6;
        const double saved = head.w_l(row, act);
        head.w_l(row, act) = saved + step;
        const double up = action_dis(logits(head, z), act);
        head.w_l(row, act) = saved - step;
        const double dn = action_dis(logits(head, z), act);
        head.w_l(row, act) = saved;
        const double fd = (up - dn) / (2.0 * step);

        const double rel = std::fabs(analytic - fd) / std::max(1.0, std::fabs(fd));
        res.worst = std::max(res.worst, rel);
        ++res.cases;
        if (rel > 1e-6) ++res.failures;
    }
    return res;
}

GradcheckResult gradcheck_generative(std::size_t cases, Rng& rng) {
    GradcheckResult res;
    for (std::size_t c = 0; c < cases; ++c) {
        const std::size_t d = 2 + rng.uniform_int(7);
        const std::size_t h = 2 + rng.uniform_int(7);
        const std::size_t batch_n = 1 + rng.uniform_int(4);
        auto m = SparseAutoencoder::init(d, h, rng);
        Tensor batch({batch_n, d});
        for (double& v : batch.data) v = rng.uniform(0.05, 0.95);

        auto grads = sae_gradients(m, batch);
        Tensor* params[4] = {&m.w_enc, &m.b_enc, &m.w_dec, &m.b_dec};
        const Tensor* analytic[4] = {&grads.w_enc, &grads.b_enc, &grads.w_dec, &grads.b_dec};
        const std::size_t group = rng.uniform_int(4);
        Tensor& p = *params[group];
        const std::size_t idx = rng.uniform_int(p.size());

        const double step = 1e-6;
        const double saved = p.data[idx];
        p.data[idx] = saved + step;
        const double up = generative_action(m, batch).value;
        p.data[idx] = saved - step;
        const double dn = generative_action(m, batch).value;
        p.data[idx] = saved;
        const double fd = (up - dn) / (2.0 * step);

        const double rel = std::fabs(analytic[group]->data[idx] - fd) / std::max(1.0, std::fabs(fd));
        res.worst = std::max(res.worst, rel);
        ++res.cases;
        if (rel > 1e-6) ++res.failures;
    }
    return res;
}

// ---------------------------------------------------------------------------
// subcommand bodies

int cmd_train_sae(const std::string& patches_dir, std::size_t hidden, std::size_t n_patches,
                  int epochs, double lr, std::uint64_t seed, const std::string& out_dir) {
    auto images = load_ppm_dir(patches_dir);
    SgdConfig cfg;
    cfg.lr_schedule = {{0, lr}};
    cfg.epochs = epochs;
    cfg.weight_decay = 0.0;  // the action already carries its own L2 term
    Rng rng(seed);
    IqaModel model = train_iqa_model(images, hidden, n_patches, cfg, rng);
    save_iqa_model(model, out_dir);
    write_config_echo(out_dir, "train-sae",
                      {{"patches", patches_dir},
                       {"h", hidden},
                       {"n_patches", n_patches},
                       {"epochs", epochs},
                       {"lr", lr},
                       {"seed", seed},
                       {"out", out_dir}});
    std::cout << "model saved to " << out_dir << " (images=" << images.size() << ")\n";
    return 0;
}

int cmd_iqa_score(const std::string& model_dir, const std::string& ref_path,
                  const std::string& dist_path, const std::string& method) {
    IqaModel model = load_iqa_model(model_dir);
    Tensor ref = read_ppm(ref_path);
    Tensor dist = read_ppm(dist_path);
    std::cout << fmt(score_pair(model, ref, dist, method)) << "\n";
    return 0;
}

int cmd_iqa_benchmark(const std::string& manifest_path, const std::string& model_dir,
                      const std::string& method, const std::string& out_dir, bool svg) {
    auto records = load_manifest(manifest_path);
    if (records.empty()) throw std::runtime_error("manifest has no records: " + manifest_path);
    IqaModel model = load_iqa_model(model_dir);

    std::vector<std::string> methods;
    if (method == "both") {
        methods = {"baseline", "proposed"};
    } else {
        methods = {method};
    }

    struct Row {
        std::string method;
        double score;
    };
    std::vector<std::vector<double>> scores(methods.size(),
                                            std::vector<double>(records.size(), 0.0));
    // cache images once; pairs may reuse references
    std::vector<Tensor> refs(records.size()), dists(records.size());
    parallel_for(records.size(), [&](std::size_t i) {
        refs[i] = read_ppm(records[i].ref_path);
        dists[i] = read_ppm(records[i].dist_path);
    });
    for (std::size_t mi = 0; mi < methods.size(); ++mi)
        parallel_for(records.size(), [&](std::size_t i) {
            scores[mi][i] = score_pair(model, refs[i], dists[i], methods[mi]);
        });

    fs::create_directories(out_dir);
    const fs::path root(out_dir);
    {
        std::ofstream out(root / "scores.csv");
        out << "ref_path,dist_path,method,score,mos\n";
        for (std::size_t mi = 0; mi < methods.size(); ++mi)
            for (std::size_t i = 0; i < records.size(); ++i)
                out << records[i].ref_path << "," << records[i].dist_path << "," << methods[mi]
                    << "," << fmt(scores[mi][i]) << "," << fmt(records[i].mos) << "\n";
        if (!out) throw std::runtime_error("cannot write scores.csv under " + out_dir);
    }

    std::vector<double> mos;
    std::vector<double> mos_std;
    bool have_std = true;
    for (const auto& r : records) {
        mos.push_back(r.mos);
        if (r.mos_std)
            mos_std.push_back(*r.mos_std);
        else
            have_std = false;
    }
    std::vector<MetricReport> reports;
    for (std::size_t mi = 0; mi < methods.size(); ++mi)
        reports.push_back(evaluate_iqa(scores[mi], mos, have_std ? &mos_std : nullptr));

    {
        std::ofstream out(root / "report.csv");
        out << "method,n,srcc,krcc,plcc,rmse,or,significance\n";
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            int sig = 0;
            if (methods.size() == 2) {
                const double r1 = reports[mi].plcc, r2 = reports[1 - mi].plcc;
                const std::size_t n = reports[mi].n;
                if (n > 3 && std::fabs(r1) < 1.0 && std::fabs(r2) < 1.0)
                    sig = significance(r1, r2, n, n);
            }
            const auto& rep = reports[mi];
            out << methods[mi] << "," << rep.n << "," << fmt(rep.srcc) << "," << fmt(rep.krcc)
                << "," << fmt(rep.plcc) << "," << fmt(rep.rmse) << "," << fmt(rep.or_) << ","
                << sig << "\n";
        }
        if (!out) throw std::runtime_error("cannot write report.csv under " + out_dir);
    }

    if (svg) {
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            auto fit = logistic_fit(scores[mi], mos);
            write_scatter_svg(root / ("scatter_" + methods[mi] + ".svg"), scores[mi], mos, fit,
                              methods[mi]);
        }
    }
    write_config_echo(out_dir, "iqa-benchmark",
                      {{"manifest", manifest_path},
                       {"model", model_dir},
                       {"method", method},
                       {"out", out_dir},
                       {"svg", svg}});
    for (std::size_t mi = 0; mi < methods.size(); ++mi)
        std::cout << methods[mi] << ": srcc=" << fmt(reports[mi].srcc)
                  << " plcc=" << fmt(reports[mi].plcc) << "\n";
    return 0;
}

int cmd_distort(const std::string& in_path, const std::string& kind, int level,
                std::uint64_t seed, const std::string& out_path) {
    Tensor img = read_ppm(in_path);
    Tensor out = distort(img, {parse_distortion(kind), level, seed});
    write_ppm(out, out_path);
    write_config_echo(fs::path(out_path).parent_path().empty()
                          ? fs::path(".")
                          : fs::path(out_path).parent_path(),
                      "distort",
                      {{"in", in_path}, {"kind", kind}, {"level", level}, {"seed", seed},
                       {"out", out_path}});
    return 0;
}

int cmd_make_dataset(const std::string& kind, std::size_t n_per_class, std::size_t classes,
                     std::size_t count, std::size_t side, std::uint64_t seed,
                     const std::string& out_dir) {
    fs::create_directories(out_dir);
    const fs::path root(out_dir);
    Rng rng(seed);
    if (kind == "synthetic") {
        auto ds = make_synthetic_dataset(n_per_class, classes, rng);
        write_tensor_file((root / "train_images.stsr").string(), flatten_images(ds.train.images),
                          Dtype::F32);
        write_tensor_file((root / "test_images.stsr").string(), flatten_images(ds.test.images),
                          Dtype::F32);
        write_tensor_file((root / "train_labels.stsr").string(), labels_to_tensor(ds.train.labels));
        write_tensor_file((root / "test_labels.stsr").string(), labels_to_tensor(ds.test.labels));
        json meta = {{"kind", "synthetic"},
                     {"classes", classes},
                     {"side", 32},
                     {"channels", 3},
                     {"n_train", ds.train.images.size()},
                     {"n_test", ds.test.images.size()}};
        std::ofstream out(root / "meta.json");
        out << meta.dump(2) << "\n";
        std::cout << "train=" << ds.train.images.size() << " test=" << ds.test.images.size()
                  << "\n";
    } else if (kind == "pristine") {
        auto corpus = make_pristine_corpus(count, side, rng);
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof(name), "img_%03zu.ppm", i);
            write_ppm(corpus[i], (root / name).string());
        }
        std::cout << "wrote " << corpus.size() << " pristine images\n";
    } else {
        throw CLI::ValidationError("--kind", "must be synthetic or pristine");
    }
    write_config_echo(out_dir, "make-dataset",
                      {{"kind", kind},
                       {"n_per_class", n_per_class},
                       {"classes", classes},
                       {"count", count},
                       {"side", side},
                       {"seed", seed},
                       {"out", out_dir}});
    return 0;
}

int cmd_train_perception(const std::string& data_dir, std::size_t hidden, int epochs, double lr,
                         std::uint64_t seed, const std::string& out_dir) {
    DatasetOnDisk ds = load_dataset_dir(data_dir);
    Rng rng(seed);
    auto net = PerceptionNet::init(ds.train_x.cols(), ds.classes, rng, hidden);
    SgdConfig cfg;
    cfg.lr_schedule = {{0, lr}, {epochs / 2, lr / 5.0}};
    cfg.epochs = epochs;
    Rng train_rng = rng.split(1);
    auto stats = train_perception(net, ds.train_x, ds.train_y, cfg, train_rng);

    std::vector<std::size_t> preds(ds.test_x.rows());
    parallel_for(preds.size(), [&](std::size_t i) {
        preds[i] = predict(percep_logits(net, row_as_vector(ds.test_x, i)));
    });
    const double test_acc = accuracy(preds, ds.test_y);

    save_perception(net, out_dir);
    write_config_echo(out_dir, "train-perception",
                      {{"data", data_dir},
                       {"hidden", hidden},
                       {"epochs", epochs},
                       {"lr", lr},
                       {"seed", seed},
                       {"out", out_dir}});
    std::cout << "train_acc=" << fmt(stats.final_train_accuracy) << " test_acc=" << fmt(test_acc)
              << "\n";
    return 0;
}

int cmd_extract_features(const std::string& data_dir, const std::string& net_dir,
                         const std::string& split, const std::string& out_dir) {
    DatasetOnDisk ds = load_dataset_dir(data_dir);
    PerceptionNet net = load_perception(net_dir);
    const Tensor& x = split == "train" ? ds.train_x : ds.test_x;
    const auto& y = split == "train" ? ds.train_y : ds.test_y;
    FeatureBundle bundle;
    bundle.z = percep_features_batch(net, x);
    bundle.labels = y;
    bundle.head = net.head;
    bundle.source = "perception:" + net_dir + ":" + split;
    save_feature_bundle(bundle, out_dir);
    write_config_echo(out_dir, "extract-features",
                      {{"data", data_dir}, {"net", net_dir}, {"split", split}, {"out", out_dir}});
    std::cout << "bundle rows=" << bundle.z.rows() << " d=" << bundle.z.cols() << "\n";
    return 0;
}

int cmd_train_head(const std::string& bundle_dir, int epochs, double lr, const std::string& norm,
                   std::uint64_t seed, const std::string& out_dir) {
    FeatureBundle bundle = load_feature_bundle(bundle_dir);
    const NormKind kind = norm == "minmax" ? NormKind::MinMax : NormKind::ZScore;
    Tensor raw = rx_matrix(bundle.head, bundle.z, nullptr);
    NormStats stats = fit_norm_matrix(raw, kind);
    Tensor rows = rx_matrix(bundle.head, bundle.z, &stats);

    Rng rng(seed);
    auto head = MlpHead::init(rows.cols(), bundle.head.n_classes(), rng);
    SgdConfig cfg;
    cfg.lr_schedule = {{0, lr}, {epochs / 2, lr / 5.0}};
    cfg.epochs = epochs;
    Rng train_rng = rng.split(1);
    auto tstats = train_head(head, rows, bundle.labels, cfg, train_rng);

    save_head(head, stats, out_dir);
    write_config_echo(out_dir, "train-head",
                      {{"bundle", bundle_dir},
                       {"epochs", epochs},
                       {"lr", lr},
                       {"norm", norm},
                       {"seed", seed},
                       {"out", out_dir}});
    std::cout << "train_acc=" << fmt(tstats.final_train_accuracy) << "\n";
    return 0;
}

int cmd_classify(const std::string& net_dir, const std::string& head_dir,
                 const std::string& image_path, const std::string& data_dir,
                 const std::string& out_dir) {
    PerceptionNet net = load_perception(net_dir);
    MlpHead head;
    NormStats stats;
    load_head(head_dir, head, stats);

    if (!image_path.empty()) {
        Tensor img = read_ppm(image_path);
        Tensor x({img.size()}, img.data);
        if (x.size() != net.input_dim())
            throw std::runtime_error("image pixels (" + std::to_string(x.size()) +
                                     ") do not match the network input (" +
                                     std::to_string(net.input_dim()) + ")");
        InferResult res = infer(x, net, stats, head);
        // 1-based class ids on the CLI surface
        std::cout << "coarse=" << res.coarse + 1 << " refined=" << res.refined + 1 << "\n";
        return 0;
    }

    DatasetOnDisk ds = load_dataset_dir(data_dir);
    std::vector<InferResult> results(ds.test_x.rows());
    parallel_for(results.size(), [&](std::size_t i) {
        results[i] = infer(row_as_vector(ds.test_x, i), net, stats, head);
    });
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "predictions.csv");
    out << "index,label,coarse,refined\n";
    for (std::size_t i = 0; i < results.size(); ++i)
        out << i << "," << ds.test_y[i] + 1 << "," << results[i].coarse + 1 << ","
            << results[i].refined + 1 << "\n";
    if (!out) throw std::runtime_error("cannot write predictions.csv under " + out_dir);
    write_config_echo(out_dir, "classify",
                      {{"net", net_dir}, {"head", head_dir}, {"data", data_dir}, {"out", out_dir}});

    std::vector<std::size_t> coarse(results.size()), refined(results.size());
    for (std::size_t i = 0; i < results.size(); ++i) {
        coarse[i] = results[i].coarse;
        refined[i] = results[i].refined;
    }
    std::cout << "coarse_acc=" << fmt(accuracy(coarse, ds.test_y))
              << " refined_acc=" << fmt(accuracy(refined, ds.test_y)) << "\n";
    return 0;
}

int cmd_robust_benchmark(const std::string& data_dir, const std::string& net_dir,
                         const std::string& head_dir, std::uint64_t seed,
                         const std::string& out_dir) {
    DatasetOnDisk ds = load_dataset_dir(data_dir);
    PerceptionNet net = load_perception(net_dir);
    MlpHead head;
    NormStats stats;
    load_head(head_dir, head, stats);

    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "robust.csv");
    out << "kind,level,acc_perception,acc_pipeline,gain\n";

    const std::size_t n = ds.test_x.rows();
    std::vector<double> level_gain_sum(5, 0.0);
    double total_percep = 0.0, total_pipeline = 0.0;
    std::size_t cells = 0;
    for (DistortionKind kind : kAllDistortions) {
        for (int level = 1; level <= 5; ++level) {
            std::vector<std::size_t> coarse(n), refined(n);
            parallel_for(n, [&](std::size_t i) {
                Tensor img = row_as_image(ds.test_x, i, ds.side, ds.channels);
                Tensor d = distort(img, {kind, level, seed + i});
                Tensor x({d.size()}, d.data);
                InferResult res = infer(x, net, stats, head);
                coarse[i] = res.coarse;
                refined[i] = res.refined;
            });
            const double acc_p = accuracy(coarse, ds.test_y);
            const double acc_h = accuracy(refined, ds.test_y);
            out << distortion_name(kind) << "," << level << "," << fmt(acc_p) << "," << fmt(acc_h)
                << "," << fmt(acc_h - acc_p) << "\n";
            level_gain_sum[level - 1] += acc_h - acc_p;
            total_percep += acc_p;
            total_pipeline += acc_h;
            ++cells;
        }
    }
    if (!out) throw std::runtime_error("cannot write robust.csv under " + out_dir);

    std::vector<double> levels{1, 2, 3, 4, 5};
    std::vector<double> gains(level_gain_sum);
    for (double& g : gains) g /= 6.0;
    const double trend = srcc(levels, gains);
    {
        std::ofstream sum(fs::path(out_dir) / "summary.csv");
        sum << "mean_acc_perception,mean_acc_pipeline,mean_gain,gain_trend_srcc\n";
        sum << fmt(total_percep / cells) << "," << fmt(total_pipeline / cells) << ","
            << fmt((total_pipeline - total_percep) / cells) << "," << fmt(trend) << "\n";
    }
    write_config_echo(out_dir, "robust-benchmark",
                      {{"data", data_dir},
                       {"net", net_dir},
                       {"head", head_dir},
                       {"seed", seed},
                       {"out", out_dir}});
    std::cout << "mean_gain=" << fmt((total_pipeline - total_percep) / cells)
              << " gain_trend_srcc=" << fmt(trend) << "\n";
    return 0;
}

int cmd_gradcheck(std::size_t cases, std::uint64_t seed) {
    Rng rng(seed);
    auto dis = gradcheck_discriminative(cases, rng);
    auto gen = gradcheck_generative(cases, rng);
    std::cout << "discriminative: cases=" << dis.cases << " failures=" << dis.failures
              << " worst_rel_err=" << fmt(dis.worst) << "\n";
    std::cout << "generative: cases=" << gen.cases << " failures=" << gen.failures
              << " worst_rel_err=" << fmt(gen.worst) << "\n";
    if (dis.failures || gen.failures) throw std::runtime_error("gradient check failed");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic surprisal toolkit: gradient features for IQA and robust classification"};
    app.require_subcommand(1);

    int exit_code = 0;

    // train-sae
    std::string ts_patches, ts_out = "iqa_model";
    std::size_t ts_h = 400, ts_n_patches = 10000;
    int ts_epochs = 30;
    double ts_lr = 0.01;
    std::uint64_t ts_seed = 7;
    auto* train_sae_cmd = app.add_subcommand("train-sae", "train the patch autoencoder model");
    train_sae_cmd->set_help_flag("--help", "print help");  // frees -h for the width flag
    train_sae_cmd->add_option("--patches", ts_patches, "directory of pristine .ppm images")
        ->required();
    train_sae_cmd->add_option("--h", ts_h, "hidden units");
    train_sae_cmd->add_option("--n-patches", ts_n_patches, "random training patches");
    train_sae_cmd->add_option("--epochs", ts_epochs, "training epochs");
    train_sae_cmd->add_option("--lr", ts_lr, "learning rate");
    train_sae_cmd->add_option("--seed", ts_seed, "rng seed");
    train_sae_cmd->add_option("--out", ts_out, "output model directory");
    train_sae_cmd->callback([&] {
        exit_code = cmd_train_sae(ts_patches, ts_h, ts_n_patches, ts_epochs, ts_lr, ts_seed, ts_out);
    });

    // iqa-score
    std::string is_model, is_ref, is_dist, is_method = "proposed";
    auto* iqa_score_cmd = app.add_subcommand("iqa-score", "score one reference/distorted pair");
    iqa_score_cmd->add_option("--model", is_model, "model directory")->required();
    iqa_score_cmd->add_option("--ref", is_ref, "reference .ppm")->required();
    iqa_score_cmd->add_option("--dist", is_dist, "distorted .ppm")->required();
    iqa_score_cmd->add_option("--method", is_method, "baseline | proposed")
        ->check(CLI::IsMember({"baseline", "proposed"}));
    iqa_score_cmd->callback([&] { exit_code = cmd_iqa_score(is_model, is_ref, is_dist, is_method); });

    // iqa-benchmark
    std::string ib_manifest, ib_model, ib_method = "both", ib_out = "iqa_out";
    bool ib_svg = false;
    auto* iqa_bench_cmd = app.add_subcommand("iqa-benchmark", "score a manifest and report metrics");
    iqa_bench_cmd->add_option("--manifest", ib_manifest, "pair manifest CSV")->required();
    iqa_bench_cmd->add_option("--model", ib_model, "model directory")->required();
    iqa_bench_cmd->add_option("--method", ib_method, "baseline | proposed | both")
        ->check(CLI::IsMember({"baseline", "proposed", "both"}));
    iqa_bench_cmd->add_option("--out", ib_out, "output directory");
    iqa_bench_cmd->add_flag("--svg", ib_svg, "emit scatter plots");
    iqa_bench_cmd->callback(
        [&] { exit_code = cmd_iqa_benchmark(ib_manifest, ib_model, ib_method, ib_out, ib_svg); });

    // distort
    std::string d_in, d_kind, d_out;
    int d_level = 1;
    std::uint64_t d_seed = 0;
    auto* distort_cmd = app.add_subcommand("distort", "apply a level-graded distortion to a .ppm");
    distort_cmd->add_option("--in", d_in, "input .ppm")->required();
    distort_cmd->add_option("--kind", d_kind, "distortion kind")->required();
    distort_cmd->add_option("--level", d_level, "severity level 1..5")->required();
    distort_cmd->add_option("--seed", d_seed, "rng seed");
    distort_cmd->add_option("--out", d_out, "output .ppm")->required();
    distort_cmd->callback([&] { exit_code = cmd_distort(d_in, d_kind, d_level, d_seed, d_out); });

    // make-dataset
    std::string md_kind = "synthetic", md_out;
    std::size_t md_npc = 200, md_classes = 10, md_count = 24, md_side = 96;
    std::uint64_t md_seed = 7;
    auto* make_ds_cmd = app.add_subcommand("make-dataset", "generate a deterministic dataset");
    make_ds_cmd->add_option("--kind", md_kind, "synthetic | pristine")
        ->check(CLI::IsMember({"synthetic", "pristine"}));
    make_ds_cmd->add_option("--n-per-class", md_npc, "samples per class (synthetic)");
    make_ds_cmd->add_option("--classes", md_classes, "class count (synthetic)");
    make_ds_cmd->add_option("--count", md_count, "image count (pristine)");
    make_ds_cmd->add_option("--side", md_side, "image side (pristine)");
    make_ds_cmd->add_option("--seed", md_seed, "rng seed");
    make_ds_cmd->add_option("--out", md_out, "output directory")->required();
    make_ds_cmd->callback([&] {
        exit_code = cmd_make_dataset(md_kind, md_npc, md_classes, md_count, md_side, md_seed, md_out);
    });

    // train-perception
    std::string tp_data, tp_out = "perception";
    std::size_t tp_hidden = 64;
    int tp_epochs = 60;
    double tp_lr = 0.1;
    std::uint64_t tp_seed = 7;
    auto* train_p_cmd = app.add_subcommand("train-perception", "train the perception classifier");
    train_p_cmd->add_option("--data", tp_data, "dataset directory")->required();
    train_p_cmd->add_option("--hidden", tp_hidden, "hidden width");
    train_p_cmd->add_option("--epochs", tp_epochs, "training epochs");
    train_p_cmd->add_option("--lr", tp_lr, "learning rate");
    train_p_cmd->add_option("--seed", tp_seed, "rng seed");
    train_p_cmd->add_option("--out", tp_out, "output directory");
    train_p_cmd->callback(
        [&] { exit_code = cmd_train_perception(tp_data, tp_hidden, tp_epochs, tp_lr, tp_seed, tp_out); });

    // extract-features
    std::string ef_data, ef_net, ef_split = "train", ef_out = "features";
    auto* extract_cmd = app.add_subcommand("extract-features", "export a feature bundle");
    extract_cmd->add_option("--data", ef_data, "dataset directory")->required();
    extract_cmd->add_option("--net", ef_net, "perception directory")->required();
    extract_cmd->add_option("--split", ef_split, "train | test")
        ->check(CLI::IsMember({"train", "test"}));
    extract_cmd->add_option("--out", ef_out, "output bundle directory");
    extract_cmd->callback([&] { exit_code = cmd_extract_features(ef_data, ef_net, ef_split, ef_out); });

    // train-head
    std::string th_bundle, th_norm = "zscore", th_out = "head";
    int th_epochs = 80;
    double th_lr = 0.1;
    std::uint64_t th_seed = 7;
    auto* train_h_cmd = app.add_subcommand("train-head", "train H on gradient features");
    train_h_cmd->add_option("--bundle", th_bundle, "feature bundle directory")->required();
    train_h_cmd->add_option("--epochs", th_epochs, "training epochs");
    train_h_cmd->add_option("--lr", th_lr, "learning rate");
    train_h_cmd->add_option("--norm", th_norm, "zscore | minmax")
        ->check(CLI::IsMember({"zscore", "minmax"}));
    train_h_cmd->add_option("--seed", th_seed, "rng seed");
    train_h_cmd->add_option("--out", th_out, "output directory");
    train_h_cmd->callback(
        [&] { exit_code = cmd_train_head(th_bundle, th_epochs, th_lr, th_norm, th_seed, th_out); });

    // classify
    std::string c_net, c_head, c_image, c_data, c_out = "classify_out";
    auto* classify_cmd = app.add_subcommand("classify", "three-step inference");
    classify_cmd->add_option("--net", c_net, "perception directory")->required();
    classify_cmd->add_option("--head", c_head, "head directory")->required();
    auto* c_image_opt = classify_cmd->add_option("--image", c_image, "single .ppm to classify");
    classify_cmd->add_option("--data", c_data, "dataset directory (classifies the test split)")
        ->excludes(c_image_opt);
    classify_cmd->add_option("--out", c_out, "output directory for batch mode");
    classify_cmd->callback([&] {
        if (c_image.empty() && c_data.empty())
            throw CLI::RequiredError("--image or --data");
        exit_code = cmd_classify(c_net, c_head, c_image, c_data, c_out);
    });

    // robust-benchmark
    std::string rb_data, rb_net, rb_head, rb_out = "robust_out";
    std::uint64_t rb_seed = 7;
    auto* robust_cmd = app.add_subcommand("robust-benchmark", "distorted-test accuracy sweep");
    robust_cmd->add_option("--data", rb_data, "dataset directory")->required();
    robust_cmd->add_option("--net", rb_net, "perception directory")->required();
    robust_cmd->add_option("--head", rb_head, "head directory")->required();
    robust_cmd->add_option("--seed", rb_seed, "distortion seed");
    robust_cmd->add_option("--out", rb_out, "output directory");
    robust_cmd->callback(
        [&] { exit_code = cmd_robust_benchmark(rb_data, rb_net, rb_head, rb_seed, rb_out); });

    // gradcheck
    std::size_t gc_cases = 1000;
    std::uint64_t gc_seed = 7;
    auto* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference gradient oracles");
    gradcheck_cmd->add_option("--cases", gc_cases, "cases per suite");
    gradcheck_cmd->add_option("--seed", gc_seed, "rng seed");
    gradcheck_cmd->callback([&] { exit_code = cmd_gradcheck(gc_cases, gc_seed); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // help/version are success; everything else is usage
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return exit_code;
}
