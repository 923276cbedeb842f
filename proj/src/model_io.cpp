#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "bbox/error.hpp"
#include "bbox/models.hpp"

namespace bbox {

namespace {

constexpr std::uint32_t kFormatVersion = 1;
constexpr std::size_t kHeaderBytes = 16;

class Writer {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
    void matrix(const Eigen::MatrixXd& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) f32(m(i, j));
    }
    void vector(const Eigen::VectorXd& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) f32(v[i]);
    }
    void header(ModelFileKind kind, std::size_t classes) {
        for (char c : {'B', 'B', 'O', 'X'}) bytes_.push_back(static_cast<std::uint8_t>(c));
        u32(kFormatVersion);
        u32(static_cast<std::uint32_t>(kind));
        u32(static_cast<std::uint32_t>(classes));
    }
    void shape(const Shape& s) {
        f32(s.channels);
        f32(s.height);
        f32(s.width);
    }
    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }
    double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
    int dim() {
        const double v = f32();
        if (!(v >= 1.0 && v <= 16777216.0) || v != std::floor(v))
            throw InvalidInput("model file holds an invalid dimension");
        return static_cast<int>(v);
    }
    Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols) {
        need(static_cast<std::size_t>(rows * cols) * 4);
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = f32();
        return m;
    }
    Eigen::VectorXd vector(Eigen::Index n) {
        need(static_cast<std::size_t>(n) * 4);
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = f32();
        return v;
    }
    void expect_end() const {
        if (pos_ != bytes_.size()) throw InvalidInput("trailing bytes in model file");
    }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw InvalidInput("model file is truncated");
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

void write_file(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace

// Layout after the header:
//   linear: C H W, W (K x CHW, row-major), bias (K)
//   mlp:    C H W hidden, W1 (hidden x CHW), b1, W2 (K x hidden), b2
std::vector<std::uint8_t> encode_model(const LinearModel& model) {
    Writer w;
    w.header(ModelFileKind::Linear, model.num_classes());
    w.shape(model.input_shape());
    w.matrix(model.weights());
    w.vector(model.bias());
    return w.take();
}

std::vector<std::uint8_t> encode_model(const MlpModel& model) {
    Writer w;
    w.header(ModelFileKind::Mlp, model.num_classes());
    w.shape(model.input_shape());
    w.f32(model.hidden_width());
    w.matrix(model.w1());
    w.vector(model.b1());
    w.matrix(model.w2());
    w.vector(model.b2());
    return w.take();
}

std::unique_ptr<ModelOracle> decode_model(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), "BBOX", 4) != 0)
        throw InvalidInput("not a model file (bad magic)");
    Reader r(bytes.subspan(4));
    if (r.u32() != kFormatVersion) throw InvalidInput("unsupported model file version");
    const auto kind = r.u32();
    const auto classes = static_cast<Eigen::Index>(r.u32());
    Shape shape;
    shape.channels = r.dim();
    shape.height = r.dim();
    shape.width = r.dim();
    const auto inputs = static_cast<Eigen::Index>(shape.size());

    std::unique_ptr<ModelOracle> model;
    if (kind == static_cast<std::uint32_t>(ModelFileKind::Linear)) {
        auto weights = r.matrix(classes, inputs);
        auto bias = r.vector(classes);
        model = std::make_unique<LinearModel>(shape, std::move(weights), std::move(bias));
    } else if (kind == static_cast<std::uint32_t>(ModelFileKind::Mlp)) {
        const auto hidden = static_cast<Eigen::Index>(r.dim());
        auto w1 = r.matrix(hidden, inputs);
        auto b1 = r.vector(hidden);
        auto w2 = r.matrix(classes, hidden);
        auto b2 = r.vector(classes);
        model = std::make_unique<MlpModel>(shape, std::move(w1), std::move(b1), std::move(w2),
                                           std::move(b2));
    } else {
        throw InvalidInput("unknown model kind " + std::to_string(kind));
    }
    r.expect_end();
    return model;
}

void save_model(const LinearModel& model, const std::filesystem::path& path) {
    write_file(encode_model(model), path);
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
    write_file(encode_model(model), path);
}

std::unique_ptr<ModelOracle> load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model file '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_model(bytes);
}

}  // namespace bbox
