#include "flowcast/model_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace flowcast {

namespace {

template <class... Fs>
struct Overloaded : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

void write_block(std::ostream& out, std::string_view name, std::size_t rows, std::size_t cols,
                 std::span<const double> values) {
    out << "block " << name << ' ' << rows << ' ' << cols << '\n';
    char buf[40];
    for (double v : values) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << buf << '\n';
    }
}

void write_block(std::ostream& out, std::string_view name, const Matrix& m) {
    write_block(out, name, m.rows(), m.cols(), m.span());
}

void write_block(std::ostream& out, std::string_view name, const Vector& v) {
    write_block(out, name, v.size(), 1, v.span());
}

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    bool next(std::string& line) {
        while (std::getline(in_, line)) {
            ++line_no_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw DataError("model file line " + std::to_string(line_no_) + ": " + what);
    }

    double number(std::string_view text) const {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc{} || ptr != text.data() + text.size()) {
            fail("bad number '" + std::string(text) + "'");
        }
        return v;
    }

private:
    std::istream& in_;
    std::size_t line_no_ = 0;
};

struct RawBlock {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;
};

struct RawModel {
    std::string kind;
    std::map<std::string, std::string> header;
    std::map<std::string, std::string> metadata;
    std::map<std::string, RawBlock> blocks;

    const std::string& get(const std::string& key) const {
        auto it = header.find(key);
        if (it == header.end()) throw DataError("model file: missing header key '" + key + "'");
        return it->second;
    }
    std::size_t count(const std::string& key) const { return std::stoul(get(key)); }
    double real(const std::string& key) const { return std::stod(get(key)); }

    Matrix matrix(const std::string& name, std::size_t rows, std::size_t cols) const {
        auto it = blocks.find(name);
        if (it == blocks.end()) throw DataError("model file: missing block '" + name + "'");
        if (it->second.rows != rows || it->second.cols != cols) {
            throw DataError("model file: block '" + name + "' has shape " +
                            std::to_string(it->second.rows) + "x" + std::to_string(it->second.cols) +
                            ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
        }
        return Matrix(rows, cols, it->second.values);
    }
    Vector vector(const std::string& name, std::size_t len) const {
        return Vector(matrix(name, len, 1).values());
    }
};

RawModel parse(std::istream& in) {
    Reader reader(in);
    RawModel raw;
    std::string line;
    if (!reader.next(line) || line != "flowcast-model 1") reader.fail("missing 'flowcast-model 1' header");
    bool ended = false;
    while (reader.next(line)) {
        std::istringstream fields(line);
        std::string key;
        fields >> key;
        if (key == "end") {
            ended = true;
            break;
        }
        if (key == "block") {
            std::string name;
            RawBlock block;
            if (!(fields >> name >> block.rows >> block.cols)) reader.fail("malformed block line");
            block.values.reserve(block.rows * block.cols);
            for (std::size_t k = 0; k < block.rows * block.cols; ++k) {
                if (!reader.next(line)) reader.fail("truncated block '" + name + "'");
                block.values.push_back(reader.number(line));
            }
            raw.blocks[name] = std::move(block);
        } else if (key == "meta") {
            std::string name;
            fields >> name;
            std::string rest;
            std::getline(fields >> std::ws, rest);
            raw.metadata[name] = rest;
        } else {
            std::string value;
            std::getline(fields >> std::ws, value);
            if (key == "kind") {
                raw.kind = value;
            } else {
                raw.header[key] = value;
            }
        }
    }
    if (!ended) reader.fail("missing 'end'");
    return raw;
}

GateParams read_gate(const RawModel& raw, char tag, std::size_t in, std::size_t h) {
    const std::string t(1, tag);
    return {raw.matrix("U_" + t, h, in), raw.matrix("W_" + t, h, h), raw.vector("b_" + t, h)};
}

}  // namespace

std::string_view model_kind(const AnyModel& model) noexcept {
    return std::visit(Overloaded{[](const LstmParams&) { return std::string_view("lstm"); },
                                 [](const RnnParams&) { return std::string_view("rnn"); },
                                 [](const MlpParams&) { return std::string_view("mlp"); },
                                 [](const SvrModel&) { return std::string_view("svr"); },
                                 [](const LinearParams&) { return std::string_view("linear"); }},
                      model);
}

void write_model(std::ostream& out, const ModelFile& file) {
    char buf[40];
    auto real = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    out << "flowcast-model 1\n";
    out << "kind " << model_kind(file.model) << '\n';
    std::visit(
        Overloaded{
            [&](const LstmParams& p) {
                out << "input_size " << p.input_size() << "\nhidden_size " << p.hidden_size()
                    << "\nencoder_steps " << p.encoder_steps << '\n';
            },
            [&](const RnnParams& p) {
                out << "input_size " << p.input_size() << "\nhidden_size " << p.hidden_size()
                    << "\noutput_size " << p.output_size() << "\nencoder_steps " << p.encoder_steps
                    << "\nhidden_activation " << to_string(p.hidden_activation)
                    << "\noutput_activation " << to_string(p.output_activation) << '\n';
            },
            [&](const MlpParams& p) {
                out << "input_size " << p.input_size() << "\nhidden_size " << p.hidden_size()
                    << "\nhidden_activation " << to_string(p.hidden_activation) << '\n';
            },
            [&](const SvrModel& m) {
                out << "n_features " << m.n_features() << "\nn_support " << m.dual_coeffs.size()
                    << "\nC " << real(m.c) << "\ngamma " << real(m.gamma) << "\nepsilon "
                    << real(m.epsilon_tube) << "\nbias " << real(m.bias) << '\n';
            },
            [&](const LinearParams& p) { out << "input_size " << p.input_size() << '\n'; }},
        file.model);
    for (const auto& [k, v] : file.metadata) out << "meta " << k << ' ' << v << '\n';

    std::visit(Overloaded{[&](const LstmParams& p) {
                              const std::pair<char, const GateParams*> gates[] = {
                                  {'g', &p.forget}, {'i', &p.input}, {'c', &p.candidate}, {'o', &p.output}};
                              for (const auto& [tag, g] : gates) {
                                  const std::string t(1, tag);
                                  write_block(out, "U_" + t, g->input_weights);
                                  write_block(out, "W_" + t, g->recurrent_weights);
                                  write_block(out, "b_" + t, g->bias);
                              }
                              write_block(out, "V_out", p.readout_weights);
                              write_block(out, "b_out", p.readout_bias);
                          },
                          [&](const RnnParams& p) {
                              write_block(out, "W", p.recurrent_weights);
                              write_block(out, "U", p.input_weights);
                              write_block(out, "V", p.output_weights);
                          },
                          [&](const MlpParams& p) {
                              write_block(out, "W1", p.hidden_weights);
                              write_block(out, "b1", p.hidden_bias);
                              write_block(out, "W2", p.output_weights);
                              write_block(out, "b2", p.output_bias);
                          },
                          [&](const SvrModel& m) {
                              write_block(out, "support_vectors", m.support_vectors);
                              write_block(out, "dual_coeffs", m.dual_coeffs);
                          },
                          [&](const LinearParams& p) {
                              write_block(out, "w", p.weights);
                              write_block(out, "b", p.bias);
                          }},
               file.model);
    out << "end\n";
}

ModelFile read_model(std::istream& in) {
    const RawModel raw = parse(in);
    ModelFile file;
    file.metadata = raw.metadata;
    try {
        if (raw.kind == "lstm") {
            const std::size_t in_size = raw.count("input_size");
            const std::size_t h = raw.count("hidden_size");
            LstmParams p = LstmParams::zeros(in_size, h, raw.count("encoder_steps"));
            p.forget = read_gate(raw, 'g', in_size, h);
            p.input = read_gate(raw, 'i', in_size, h);
            p.candidate = read_gate(raw, 'c', in_size, h);
            p.output = read_gate(raw, 'o', in_size, h);
            p.readout_weights = raw.matrix("V_out", h, 1);
            p.readout_bias = raw.vector("b_out", 1);
            p.validate();
            file.model = std::move(p);
        } else if (raw.kind == "rnn") {
            const std::size_t in_size = raw.count("input_size");
            const std::size_t h = raw.count("hidden_size");
            const std::size_t o = raw.count("output_size");
            RnnParams p = RnnParams::zeros(in_size, h, raw.count("encoder_steps"), o);
            p.recurrent_weights = raw.matrix("W", h, h);
            p.input_weights = raw.matrix("U", in_size, h);
            p.output_weights = raw.matrix("V", h, o);
            p.hidden_activation = parse_activation(raw.get("hidden_activation"));
            p.output_activation = parse_activation(raw.get("output_activation"));
            p.validate();
            file.model = std::move(p);
        } else if (raw.kind == "mlp") {
            const std::size_t in_size = raw.count("input_size");
            const std::size_t h = raw.count("hidden_size");
            MlpParams p = MlpParams::zeros(in_size, h, parse_activation(raw.get("hidden_activation")));
            p.hidden_weights = raw.matrix("W1", in_size, h);
            p.hidden_bias = raw.vector("b1", h);
            p.output_weights = raw.matrix("W2", h, 1);
            p.output_bias = raw.vector("b2", 1);
            p.validate();
            file.model = std::move(p);
        } else if (raw.kind == "svr") {
            SvrModel m;
            const std::size_t nf = raw.count("n_features");
            const std::size_t ns = raw.count("n_support");
            m.c = raw.real("C");
            m.gamma = raw.real("gamma");
            m.epsilon_tube = raw.real("epsilon");
            m.bias = raw.real("bias");
            m.support_vectors = raw.matrix("support_vectors", ns, nf);
            m.dual_coeffs = raw.vector("dual_coeffs", ns);
            file.model = std::move(m);
        } else if (raw.kind == "linear") {
            const std::size_t in_size = raw.count("input_size");
            LinearParams p = LinearParams::zeros(in_size);
            p.weights = raw.vector("w", in_size);
            p.bias = raw.vector("b", 1);
            file.model = std::move(p);
        } else {
            throw DataError("model file: unknown kind '" + raw.kind + "'");
        }
    } catch (const std::logic_error& e) {
        throw DataError(std::string("model file: bad header value (") + e.what() + ")");
    }
    return file;
}

void save_model(const std::filesystem::path& path, const ModelFile& file) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    write_model(out, file);
}

ModelFile load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return read_model(in);
}

double predict(const AnyModel& model, std::span<const double> features) {
    return std::visit(Overloaded{[&](const SvrModel& m) { return svr_predict(m, features); },
                                 [&](const auto& p) { return forward_predict(p, features); }},
                      model);
}

}  // namespace flowcast
