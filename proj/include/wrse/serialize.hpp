#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "wrse/ensemble.hpp"
#include "wrse/errors.hpp"
#include "wrse/parametric.hpp"

namespace wrse {

// Model archive: single binary file, explicitly little-endian regardless of
// host. Layout (all counts u32/u64, all reals IEEE-754 binary64):
//   magic "WRSEBIN1"
//   u32 model_kind        1 = ensemble, 2 = parametric
// ensemble:
//   u32 base_kind, u32 beyond_last, u64 n_features
//   u32 spacing (0 weighted / 1 even), f64 gamma, f64 span_days
//   u64 K, f64 horizons[K], then K classifier blocks
// classifier block: u32 kind (0 gbt / 1 logistic / 2 ffnet), then parameters
// parametric:
//   u32 head_kind, u32 beyond_last, dense net block
// dense net block: u64 n_sizes, u64 sizes[], u64 n_params, f64 params[]

namespace detail {

class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void raw(const char* data, std::size_t n) { buf_.append(data, n); }

    const std::string& bytes() const { return buf_; }

private:
    std::string buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::string bytes) : buf_(std::move(bytes)) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
    std::uint32_t u32() {
        const char* p = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        const char* p = take(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str(std::size_t n) { return std::string(take(n), n); }
    bool exhausted() const { return pos_ == buf_.size(); }

private:
    const char* take(std::size_t n) {
        if (pos_ + n > buf_.size()) throw DataFormatError("archive truncated");
        const char* p = buf_.data() + pos_;
        pos_ += n;
        return p;
    }
    std::string buf_;
    std::size_t pos_ = 0;
};

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataFormatError("cannot open archive " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

constexpr char kMagic[] = "WRSEBIN1";

inline void write_net(ByteWriter& w, const DenseNet& net) {
    w.u64(net.sizes().size());
    for (std::size_t s : net.sizes()) w.u64(s);
    w.u64(net.params().size());
    for (double p : net.params()) w.f64(p);
}

inline DenseNet read_net(ByteReader& r) {
    const std::uint64_t n_sizes = r.u64();
    if (n_sizes < 2 || n_sizes > 64) throw DataFormatError("archive: bad net layer count");
    std::vector<std::size_t> sizes(n_sizes);
    for (auto& s : sizes) s = r.u64();
    std::vector<std::size_t> hidden(sizes.begin() + 1, sizes.end() - 1);
    DenseNet net(sizes.front(), hidden, sizes.back(), 0);
    const std::uint64_t n_params = r.u64();
    if (n_params != net.params().size()) throw DataFormatError("archive: net parameter count mismatch");
    for (auto& p : net.params()) p = r.f64();
    return net;
}

inline void write_classifier(ByteWriter& w, const BinaryClassifier& clf) {
    if (const auto* gbt = std::get_if<GbtModel>(&clf.model)) {
        w.u32(0);
        w.u64(gbt->n_features);
        w.f64(gbt->base_score);
        w.u8(gbt->single_class ? 1 : 0);
        w.i32(gbt->rounds_trained);
        w.i32(gbt->best_round);
        w.u64(gbt->trees.size());
        for (const GbtTree& t : gbt->trees) {
            w.u64(t.nodes.size());
            for (const GbtNode& n : t.nodes) {
                w.i32(n.feature);
                w.f64(n.threshold);
                w.i32(n.left);
                w.i32(n.right);
                w.f64(n.leaf_value);
            }
        }
    } else if (const auto* logistic = std::get_if<LogisticModel>(&clf.model)) {
        w.u32(1);
        w.u64(logistic->weights.size());
        for (double v : logistic->weights) w.f64(v);
        w.f64(logistic->bias);
        w.u8(logistic->single_class ? 1 : 0);
        w.i32(logistic->best_epoch);
    } else {
        const auto& ffnet = std::get<FfnetModel>(clf.model);
        w.u32(2);
        write_net(w, ffnet.net);
        w.u8(ffnet.single_class ? 1 : 0);
        w.f64(ffnet.constant_prior);
        w.i32(ffnet.best_epoch);
    }
}

inline BinaryClassifier read_classifier(ByteReader& r) {
    const std::uint32_t kind = r.u32();
    if (kind == 0) {
        GbtModel m;
        m.n_features = static_cast<std::uint32_t>(r.u64());
        m.base_score = r.f64();
        m.single_class = r.u8() != 0;
        m.rounds_trained = r.i32();
        m.best_round = r.i32();
        const std::uint64_t n_trees = r.u64();
        m.trees.resize(n_trees);
        for (auto& t : m.trees) {
            const std::uint64_t n_nodes = r.u64();
            t.nodes.resize(n_nodes);
            for (auto& n : t.nodes) {
                n.feature = r.i32();
                n.threshold = r.f64();
                n.left = r.i32();
                n.right = r.i32();
                n.leaf_value = r.f64();
            }
        }
        return BinaryClassifier{std::move(m)};
    }
    if (kind == 1) {
        LogisticModel m;
        m.weights.resize(r.u64());
        for (auto& v : m.weights) v = r.f64();
        m.bias = r.f64();
        m.single_class = r.u8() != 0;
        m.best_epoch = r.i32();
        return BinaryClassifier{std::move(m)};
    }
    if (kind == 2) {
        FfnetModel m;
        m.net = read_net(r);
        m.single_class = r.u8() != 0;
        m.constant_prior = r.f64();
        m.best_epoch = r.i32();
        return BinaryClassifier{std::move(m)};
    }
    throw DataFormatError("archive: unknown classifier kind");
}

}  // namespace detail

inline std::string serialize_wrse(const WrseModel& model) {
    detail::ByteWriter w;
    w.raw(detail::kMagic, 8);
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(model.base_kind));
    w.u32(static_cast<std::uint32_t>(model.beyond_last));
    w.u64(model.n_features);
    w.u32(model.grid.spacing == SpacingKind::Weighted ? 0 : 1);
    w.f64(model.grid.gamma);
    w.f64(model.grid.span_days);
    w.u64(model.grid.size());
    for (double h : model.grid.horizons_hours) w.f64(h);
    for (const auto& clf : model.classifiers) detail::write_classifier(w, clf);
    return w.bytes();
}

inline WrseModel deserialize_wrse(std::string bytes) {
    detail::ByteReader r(std::move(bytes));
    if (r.str(8) != detail::kMagic) throw DataFormatError("archive: bad magic");
    if (r.u32() != 1) throw DataFormatError("archive: not an ensemble model");
    WrseModel model;
    model.base_kind = static_cast<BaseKind>(r.u32());
    model.beyond_last = static_cast<BeyondLast>(r.u32());
    model.n_features = r.u64();
    model.grid.spacing = r.u32() == 0 ? SpacingKind::Weighted : SpacingKind::Even;
    model.grid.gamma = r.f64();
    model.grid.span_days = r.f64();
    model.grid.horizons_hours.resize(r.u64());
    for (auto& h : model.grid.horizons_hours) h = r.f64();
    model.grid.validate();
    model.classifiers.reserve(model.grid.size());
    for (std::size_t k = 0; k < model.grid.size(); ++k)
        model.classifiers.push_back(detail::read_classifier(r));
    if (!r.exhausted()) throw DataFormatError("archive: trailing bytes");
    return model;
}

inline void save_wrse(const WrseModel& model, const std::filesystem::path& path) {
    detail::write_file(path, serialize_wrse(model));
}

inline WrseModel load_wrse(const std::filesystem::path& path) {
    return deserialize_wrse(detail::read_file(path));
}

inline std::string serialize_parametric(const ParametricModel& model) {
    detail::ByteWriter w;
    w.raw(detail::kMagic, 8);
    w.u32(2);
    w.u32(static_cast<std::uint32_t>(model.head));
    w.u32(static_cast<std::uint32_t>(model.beyond_last));
    detail::write_net(w, model.predictor);
    return w.bytes();
}

inline ParametricModel deserialize_parametric(std::string bytes) {
    detail::ByteReader r(std::move(bytes));
    if (r.str(8) != detail::kMagic) throw DataFormatError("archive: bad magic");
    if (r.u32() != 2) throw DataFormatError("archive: not a parametric model");
    ParametricModel model;
    model.head = static_cast<HeadKind>(r.u32());
    model.beyond_last = static_cast<BeyondLast>(r.u32());
    model.predictor = detail::read_net(r);
    if (!r.exhausted()) throw DataFormatError("archive: trailing bytes");
    return model;
}

inline void save_parametric(const ParametricModel& model, const std::filesystem::path& path) {
    detail::write_file(path, serialize_parametric(model));
}

inline ParametricModel load_parametric(const std::filesystem::path& path) {
    return deserialize_parametric(detail::read_file(path));
}

}  // namespace wrse
