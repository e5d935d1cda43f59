#include "dataset.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

#include "errors.hpp"
#include "random.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mg {

LayeredFeatureSet::LayeredFeatureSet(std::vector<TokenRecord> tokens, std::vector<FeatureMatrix> layers,
                                     std::map<std::string, LabelMap> label_maps)
    : tokens_(std::move(tokens)), layers_(std::move(layers)), label_maps_(std::move(label_maps)) {
    require(!layers_.empty(), "feature set needs at least one layer");
    require(!tokens_.empty(), "feature set needs at least one token");
    const auto rows = static_cast<Eigen::Index>(tokens_.size());
    const auto cols = layers_.front().cols();
    require(cols > 0, "ambient dimension must be positive");
    for (const auto& m : layers_)
        require(m.rows() == rows && m.cols() == cols, "every layer matrix must have shape num_tokens x dim");
    for (const auto& [task, labels] : label_maps_)
        require(labels.size() == tokens_.size(), "label map for task '" + task + "' has wrong length");
}

const FeatureMatrix& LayeredFeatureSet::layer(std::size_t k) const {
    require(k < layers_.size(), "layer index " + std::to_string(k) + " out of range");
    return layers_[k];
}

const LabelMap& LayeredFeatureSet::labels(const std::string& task) const {
    auto it = label_maps_.find(task);
    if (it == label_maps_.end()) fail(ErrorCode::UnknownTask, "unknown task '" + task + "'");
    return it->second;
}

std::vector<std::string> LayeredFeatureSet::distinct_labels(const std::string& task) const {
    std::set<std::string> seen;
    for (const auto& l : labels(task))
        if (l) seen.insert(*l);
    return {seen.begin(), seen.end()};
}

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

FeatureMatrix read_f32le(const fs::path& p, std::size_t rows, std::size_t cols) {
    const std::string bytes = read_file(p);
    const std::size_t expected = rows * cols * 4;
    if (bytes.size() != expected)
        fail(ErrorCode::Corruption, p.string() + ": expected " + std::to_string(expected) + " bytes, found " +
                                        std::to_string(bytes.size()));
    FeatureMatrix m(rows, cols);
    float* out = m.data();
    for (std::size_t i = 0; i < rows * cols; ++i) {
        const auto* b = reinterpret_cast<const unsigned char*>(bytes.data() + 4 * i);
        const std::uint32_t u = std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
                                (std::uint32_t(b[3]) << 24);
        out[i] = std::bit_cast<float>(u);
    }
    return m;
}

FeatureMatrix read_csv_layer(const fs::path& p, std::size_t rows, std::size_t cols) {
    std::ifstream in(p);
    if (!in) fail(ErrorCode::Io, "cannot open " + p.string());
    FeatureMatrix m(rows, cols);
    std::string line;
    std::size_t r = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (r >= rows) fail(ErrorCode::Corruption, p.string() + ": more rows than num_tokens");
        std::size_t c = 0;
        const char* cur = line.data();
        const char* end = line.data() + line.size();
        while (cur < end) {
            while (cur < end && (*cur == ' ' || *cur == '\t')) ++cur;
            float v = 0;
            auto [ptr, ec] = std::from_chars(cur, end, v);
            if (ec != std::errc()) fail(ErrorCode::Corruption, p.string() + ": bad number on row " + std::to_string(r));
            if (c >= cols) fail(ErrorCode::Corruption, p.string() + ": row " + std::to_string(r) + " too long");
            m(r, c++) = v;
            cur = ptr;
            while (cur < end && (*cur == ' ' || *cur == '\t')) ++cur;
            if (cur < end) {
                if (*cur != ',') fail(ErrorCode::Corruption, p.string() + ": expected ',' on row " + std::to_string(r));
                ++cur;
            }
        }
        if (c != cols) fail(ErrorCode::Corruption, p.string() + ": row " + std::to_string(r) + " has wrong width");
        ++r;
    }
    if (r != rows) fail(ErrorCode::Corruption, p.string() + ": expected " + std::to_string(rows) + " rows");
    return m;
}

template <typename T>
T get_field(const json& j, const char* key) {
    if (!j.contains(key)) fail(ErrorCode::Format, std::string("manifest missing key '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(ErrorCode::Format, std::string("manifest key '") + key + "': " + e.what());
    }
}

} // namespace

LayeredFeatureSet load_feature_container(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path)) fail(ErrorCode::Format, "missing manifest: " + manifest_path.string());

    json manifest;
    try {
        manifest = json::parse(read_file(manifest_path));
    } catch (const json::parse_error& e) {
        fail(ErrorCode::Format, "manifest is not valid JSON: " + std::string(e.what()));
    }
    if (!manifest.is_object()) fail(ErrorCode::Format, "manifest must be a JSON object");

    const auto version = get_field<int>(manifest, "version");
    if (version != 1) fail(ErrorCode::UnsupportedFormat, "unsupported container version " + std::to_string(version));
    const auto dtype = get_field<std::string>(manifest, "dtype");
    if (dtype != "f32le" && dtype != "csv") fail(ErrorCode::UnsupportedFormat, "unsupported dtype '" + dtype + "'");

    const auto num_tokens = get_field<std::size_t>(manifest, "num_tokens");
    const auto dim = get_field<std::size_t>(manifest, "dim");
    const auto num_layers = get_field<std::size_t>(manifest, "num_layers");
    if (num_tokens == 0 || dim == 0 || num_layers == 0)
        fail(ErrorCode::Corruption, "num_tokens, dim and num_layers must be positive");

    std::vector<std::string> layer_files;
    if (manifest.contains("layer_files")) {
        layer_files = get_field<std::vector<std::string>>(manifest, "layer_files");
    } else if (dtype == "csv") {
        for (std::size_t k = 0; k < num_layers; ++k) layer_files.push_back("layer_" + std::to_string(k) + ".csv");
    } else {
        fail(ErrorCode::Format, "manifest missing key 'layer_files'");
    }
    if (layer_files.size() != num_layers)
        fail(ErrorCode::Corruption, "layer_files lists " + std::to_string(layer_files.size()) + " files for " +
                                        std::to_string(num_layers) + " layers");

    std::vector<TokenRecord> tokens;
    const json& jt = manifest.contains("tokens") ? manifest.at("tokens") : json::array();
    if (!jt.is_array() || jt.size() != num_tokens)
        fail(ErrorCode::Corruption, "tokens table must list exactly num_tokens entries");
    tokens.reserve(num_tokens);
    for (const auto& t : jt) {
        try {
            tokens.push_back({t.value("text", std::string()), t.value("sentence", std::size_t{0}),
                              t.value("position", std::size_t{0})});
        } catch (const json::exception& e) {
            fail(ErrorCode::Format, std::string("bad token record: ") + e.what());
        }
    }

    std::map<std::string, LabelMap> label_maps;
    if (manifest.contains("labels")) {
        const json& jl = manifest.at("labels");
        if (!jl.is_object()) fail(ErrorCode::Format, "'labels' must be an object");
        for (const auto& [task, arr] : jl.items()) {
            if (!arr.is_array() || arr.size() != num_tokens)
                fail(ErrorCode::Corruption, "labels for task '" + task + "' must have num_tokens entries");
            LabelMap lm;
            lm.reserve(num_tokens);
            for (const auto& v : arr) {
                if (v.is_null())
                    lm.emplace_back(std::nullopt);
                else if (v.is_string())
                    lm.emplace_back(v.get<std::string>());
                else
                    fail(ErrorCode::Format, "labels for task '" + task + "' must be strings or null");
            }
            label_maps.emplace(task, std::move(lm));
        }
    }

    std::vector<FeatureMatrix> layers;
    layers.reserve(num_layers);
    for (const auto& rel : layer_files) {
        const fs::path p = dir / rel;
        layers.push_back(dtype == "f32le" ? read_f32le(p, num_tokens, dim) : read_csv_layer(p, num_tokens, dim));
    }
    return LayeredFeatureSet(std::move(tokens), std::move(layers), std::move(label_maps));
}

void write_feature_container(const LayeredFeatureSet& lfs, const fs::path& dir, ContainerDtype dtype) {
    fs::create_directories(dir);
    json manifest;
    manifest["version"] = 1;
    manifest["num_tokens"] = lfs.num_tokens();
    manifest["dim"] = lfs.ambient_dim();
    manifest["num_layers"] = lfs.layer_count();
    manifest["dtype"] = dtype == ContainerDtype::F32Le ? "f32le" : "csv";

    json files = json::array();
    for (std::size_t k = 0; k < lfs.layer_count(); ++k) {
        const std::string name = "layer_" + std::to_string(k) + (dtype == ContainerDtype::F32Le ? ".bin" : ".csv");
        files.push_back(name);
        const FeatureMatrix& m = lfs.layer(k);
        if (dtype == ContainerDtype::F32Le) {
            std::string bytes(static_cast<std::size_t>(m.size()) * 4, '\0');
            for (Eigen::Index i = 0; i < m.size(); ++i) {
                const auto u = std::bit_cast<std::uint32_t>(m.data()[i]);
                for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<char>((u >> (8 * b)) & 0xff);
            }
            std::ofstream out(dir / name, std::ios::binary);
            out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
            if (!out) fail(ErrorCode::Io, "cannot write " + (dir / name).string());
        } else {
            std::ofstream out(dir / name);
            char buf[32];
            for (Eigen::Index r = 0; r < m.rows(); ++r) {
                for (Eigen::Index c = 0; c < m.cols(); ++c) {
                    auto res = std::to_chars(buf, buf + sizeof buf, m(r, c));
                    if (c) out << ',';
                    out.write(buf, res.ptr - buf);
                }
                out << '\n';
            }
            if (!out) fail(ErrorCode::Io, "cannot write " + (dir / name).string());
        }
    }
    manifest["layer_files"] = files;

    json tokens = json::array();
    for (const auto& t : lfs.tokens())
        tokens.push_back({{"text", t.text}, {"sentence", t.sentence}, {"position", t.position}});
    manifest["tokens"] = tokens;

    json labels = json::object();
    for (const auto& [task, lm] : lfs.label_maps()) {
        json arr = json::array();
        for (const auto& l : lm) arr.push_back(l ? json(*l) : json(nullptr));
        labels[task] = arr;
    }
    manifest["labels"] = labels;

    std::ofstream out(dir / "manifest.json");
    out << manifest.dump(2) << '\n';
    if (!out) fail(ErrorCode::Io, "cannot write manifest in " + dir.string());
}

Eigen::Index ManifoldSet::total_points() const {
    Eigen::Index n = 0;
    for (const auto& m : manifolds) n += m.size();
    return n;
}

std::vector<std::size_t> ManifoldSet::sizes() const {
    std::vector<std::size_t> out;
    out.reserve(manifolds.size());
    for (const auto& m : manifolds) out.push_back(static_cast<std::size_t>(m.size()));
    return out;
}

void ManifoldSet::validate() const {
    require(manifolds.size() >= 2, "a manifold set needs at least 2 manifolds");
    const Eigen::Index dim = ambient_dim();
    require(dim > 0, "manifold points must have positive dimension");
    for (const auto& m : manifolds) {
        require(m.size() >= 1, "manifold '" + m.label + "' is empty");
        require(m.points.cols() == dim, "manifold '" + m.label + "' has mismatched dimension");
        require(static_cast<Eigen::Index>(m.token_indices.size()) == m.size(),
                "manifold '" + m.label + "' token index count does not match its points");
        require(m.points.allFinite(), "manifold '" + m.label + "' has non-finite coordinates");
        std::vector<std::size_t> idx = m.token_indices;
        std::sort(idx.begin(), idx.end());
        require(std::adjacent_find(idx.begin(), idx.end()) == idx.end(),
                "manifold '" + m.label + "' repeats a token index");
    }
}

ManifoldSet make_manifold_set(std::vector<Eigen::MatrixXd> blocks, std::vector<std::string> labels,
                              std::string task) {
    ManifoldSet ms;
    ms.task = std::move(task);
    std::size_t next = 0;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        Manifold m;
        m.label = i < labels.size() ? labels[i] : "m" + std::to_string(i);
        m.points = std::move(blocks[i]);
        m.token_indices.resize(static_cast<std::size_t>(m.points.rows()));
        std::iota(m.token_indices.begin(), m.token_indices.end(), next);
        next += m.token_indices.size();
        ms.manifolds.push_back(std::move(m));
    }
    ms.validate();
    return ms;
}

void SamplingPolicy::validate() const {
    require(instances_per_tag >= 1, "instances_per_tag must be >= 1");
    require(repetitions >= 1, "repetitions must be >= 1");
    require(!tag_list.empty(), "tag_list must not be empty");
    std::set<std::string> uniq(tag_list.begin(), tag_list.end());
    require(uniq.size() == tag_list.size(), "tag_list contains duplicates");
}

TokenSelection select_tokens(const LayeredFeatureSet& lfs, const std::string& task, const SamplingPolicy& policy,
                             std::size_t repetition) {
    policy.validate();
    require(repetition < policy.repetitions, "repetition index out of range");
    const LabelMap& labels = lfs.labels(task);

    std::map<std::string, std::vector<std::size_t>> available;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i]) available[*labels[i]].push_back(i);

    TokenSelection sel;
    for (const auto& tag : policy.tag_list) {
        auto it = available.find(tag);
        if (it == available.end()) {
            sel.warnings.push_back("tag '" + tag + "' has no instances in task '" + task + "'; dropped");
            continue;
        }
        std::vector<std::size_t> pool = it->second;
        const std::size_t take = std::min(policy.instances_per_tag, pool.size());
        Rng rng = make_rng(derive_seed(policy.seed, Stream::Sampling, stable_hash(task), stable_hash(tag), repetition));
        // partial Fisher-Yates
        for (std::size_t i = 0; i < take; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
            std::swap(pool[i], pool[pick(rng)]);
        }
        pool.resize(take);
        std::sort(pool.begin(), pool.end());
        sel.labels.push_back(tag);
        sel.indices.push_back(std::move(pool));
    }
    if (sel.labels.size() < 2)
        fail(ErrorCode::InsufficientClasses,
             "task '" + task + "' has " + std::to_string(sel.labels.size()) + " non-empty tags; need at least 2");
    return sel;
}

ManifoldSet build_manifold_set(const LayeredFeatureSet& lfs, const std::string& task, std::size_t layer,
                               const SamplingPolicy& policy, std::size_t repetition) {
    if (!lfs.has_task(task)) fail(ErrorCode::UnknownTask, "unknown task '" + task + "'");
    require(layer < lfs.layer_count(), "layer " + std::to_string(layer) + " out of range");
    TokenSelection sel = select_tokens(lfs, task, policy, repetition);

    const FeatureMatrix& feats = lfs.layer(layer);
    ManifoldSet ms;
    ms.task = task;
    ms.layer = layer;
    ms.seed = policy.seed;
    ms.warnings = std::move(sel.warnings);
    for (std::size_t t = 0; t < sel.labels.size(); ++t) {
        Manifold m;
        m.label = sel.labels[t];
        m.token_indices = sel.indices[t];
        m.points.resize(static_cast<Eigen::Index>(m.token_indices.size()), feats.cols());
        for (std::size_t r = 0; r < m.token_indices.size(); ++r)
            m.points.row(static_cast<Eigen::Index>(r)) =
                feats.row(static_cast<Eigen::Index>(m.token_indices[r])).cast<double>();
        ms.manifolds.push_back(std::move(m));
    }
    ms.validate();
    return ms;
}

ManifoldSet shuffle_labels(const ManifoldSet& ms, std::uint64_t seed) {
    ms.validate();
    const Eigen::MatrixXd pooled = pooled_points(ms);
    std::vector<std::size_t> pooled_tokens;
    for (const auto& m : ms.manifolds)
        pooled_tokens.insert(pooled_tokens.end(), m.token_indices.begin(), m.token_indices.end());

    std::vector<Eigen::Index> perm(static_cast<std::size_t>(pooled.rows()));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    Rng rng = make_rng(derive_seed(seed, Stream::Shuffle));
    std::shuffle(perm.begin(), perm.end(), rng);

    ManifoldSet out = ms;
    std::size_t cursor = 0;
    for (auto& m : out.manifolds) {
        for (Eigen::Index r = 0; r < m.size(); ++r, ++cursor) {
            m.points.row(r) = pooled.row(perm[cursor]);
            m.token_indices[static_cast<std::size_t>(r)] = pooled_tokens[static_cast<std::size_t>(perm[cursor])];
        }
    }
    return out;
}

ManifoldSet subsample(const ManifoldSet& ms, std::size_t count, std::uint64_t seed) {
    require(count >= 1, "subsample count must be >= 1");
    ManifoldSet out = ms;
    for (std::size_t mi = 0; mi < out.manifolds.size(); ++mi) {
        Manifold& m = out.manifolds[mi];
        const auto n = static_cast<std::size_t>(m.size());
        if (n <= count) continue;
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng = make_rng(derive_seed(seed, Stream::Subsample, mi));
        for (std::size_t i = 0; i < count; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, n - 1);
            std::swap(order[i], order[pick(rng)]);
        }
        order.resize(count);
        std::sort(order.begin(), order.end());
        Eigen::MatrixXd pts(static_cast<Eigen::Index>(count), m.points.cols());
        std::vector<std::size_t> tokens(count);
        for (std::size_t i = 0; i < count; ++i) {
            pts.row(static_cast<Eigen::Index>(i)) = m.points.row(static_cast<Eigen::Index>(order[i]));
            tokens[i] = m.token_indices[order[i]];
        }
        m.points = std::move(pts);
        m.token_indices = std::move(tokens);
    }
    return out;
}

Eigen::MatrixXd pooled_points(const ManifoldSet& ms) {
    Eigen::MatrixXd all(ms.total_points(), ms.ambient_dim());
    Eigen::Index r = 0;
    for (const auto& m : ms.manifolds) {
        all.middleRows(r, m.size()) = m.points;
        r += m.size();
    }
    return all;
}

} // namespace mg
