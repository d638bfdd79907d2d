#include "idcap/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "idcap/errors.hpp"

namespace idcap {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr char kMagic[6] = {'I', 'D', 'C', 'A', 'P', '1'};

ordered_json json_or_null(double v) {
    if (std::isinf(v)) return nullptr;
    return v;
}

double from_json_or_inf(const ordered_json& j) {
    if (j.is_null()) return std::numeric_limits<double>::infinity();
    return j.get<double>();
}

ordered_json layer_to_json(const Layer& l) {
    ordered_json j;
    if (const auto* d = std::get_if<DenseSpec>(&l.spec)) {
        j["kind"] = "dense";
        j["in"] = d->in;
        j["out"] = d->out;
    } else if (const auto* c = std::get_if<ConvSpec>(&l.spec)) {
        j["kind"] = "conv";
        j["k"] = c->kernel;
        j["cin"] = c->cin;
        j["cout"] = c->cout;
    } else if (const auto* lr = std::get_if<LeakyReluSpec>(&l.spec)) {
        j["kind"] = "leaky_relu";
        j["slope"] = lr->slope;
    } else if (const auto* sp = std::get_if<SoftplusSpec>(&l.spec)) {
        j["kind"] = "softplus";
        j["shift"] = sp->shift;
        j["cap"] = json_or_null(sp->cap);
    } else if (const auto* ex = std::get_if<ExpSpec>(&l.spec)) {
        j["kind"] = "exp";
        j["lo"] = ex->lo;
        j["hi"] = json_or_null(ex->hi);
    } else if (const auto* dp = std::get_if<DropoutSpec>(&l.spec)) {
        j["kind"] = "dropout";
        j["p"] = dp->p;
    }
    return j;
}

Layer layer_from_json(const ordered_json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "dense") {
        return make_dense(j.at("in").get<std::size_t>(), j.at("out").get<std::size_t>());
    }
    if (kind == "conv") {
        return make_conv(j.at("k").get<int>(), j.at("cin").get<std::size_t>(),
                         j.at("cout").get<std::size_t>());
    }
    if (kind == "leaky_relu") {
        return make_leaky_relu(j.at("slope").get<double>());
    }
    if (kind == "softplus") {
        return make_softplus(j.at("shift").get<double>(), from_json_or_inf(j.at("cap")));
    }
    if (kind == "exp") {
        return make_exp_clamped(j.at("lo").get<double>(), from_json_or_inf(j.at("hi")));
    }
    if (kind == "dropout") {
        return make_dropout(j.at("p").get<double>());
    }
    throw io_error("checkpoint: unknown layer kind '" + kind + "'");
}

void put_f64_block(std::string& out, const Tensor& t) {
    for (double v : t.values()) {
        uint64_t bits;
        std::memcpy(&bits, &v, 8);
        for (int i = 0; i < 8; ++i) {
            out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
        }
    }
}

void read_f64_block(const std::string& in, std::size_t& pos, Tensor& t) {
    const std::size_t need = t.size() * 8;
    if (pos + need > in.size()) {
        throw io_error("checkpoint: truncated weight payload");
    }
    for (std::size_t n = 0; n < t.size(); ++n) {
        uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) {
            bits |= static_cast<uint64_t>(static_cast<unsigned char>(in[pos + n * 8 + i])) << (8 * i);
        }
        double v;
        std::memcpy(&v, &bits, 8);
        t[n] = v;
    }
    pos += need;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    ordered_json header;
    header["kind"] = model_kind_name(ckpt.model.kind);
    ordered_json nets = ordered_json::array();
    ordered_json shapes = ordered_json::array();
    for (const Network& net : ckpt.model.nets) {
        ordered_json layers = ordered_json::array();
        for (const Layer& l : net.layers) {
            layers.push_back(layer_to_json(l));
        }
        nets.push_back(std::move(layers));
    }
    for (const Tensor* p : model_params(ckpt.model)) {
        shapes.push_back(p->shape());
    }
    header["nets"] = std::move(nets);
    header["param_shapes"] = std::move(shapes);
    header["seed"] = ckpt.seed;
    header["step"] = ckpt.step;
    if (ckpt.adam) {
        ordered_json adam;
        adam["lr"] = ckpt.adam->hyper.lr;
        adam["beta1"] = ckpt.adam->hyper.beta1;
        adam["beta2"] = ckpt.adam->hyper.beta2;
        adam["eps"] = ckpt.adam->hyper.eps;
        adam["step"] = ckpt.adam->step;
        header["adam"] = std::move(adam);
    } else {
        header["adam"] = nullptr;
    }

    const std::string header_str = header.dump();
    if (header_str.size() > std::numeric_limits<uint32_t>::max()) {
        throw io_error("checkpoint: header too large");
    }

    std::string out;
    out.append(kMagic, sizeof(kMagic));
    const uint32_t hlen = static_cast<uint32_t>(header_str.size());
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((hlen >> (8 * i)) & 0xff));
    }
    out += header_str;
    for (const Tensor* p : model_params(ckpt.model)) {
        put_f64_block(out, *p);
    }
    if (ckpt.adam) {
        for (const Tensor& t : ckpt.adam->m) put_f64_block(out, t);
        for (const Tensor& t : ckpt.adam->v) put_f64_block(out, t);
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw io_error("checkpoint: cannot open '" + path + "' for writing");
    }
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) {
        throw io_error("checkpoint: write failed for '" + path + "'");
    }
}

Checkpoint load_checkpoint(const std::string& path) {
    if (!std::filesystem::exists(path)) {
        throw missing_artifact_error("checkpoint not found: " + path);
    }
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw io_error("checkpoint: cannot open '" + path + "'");
    }
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    if (bytes.size() < sizeof(kMagic) + 4 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw io_error("checkpoint: bad magic in '" + path + "'");
    }
    std::size_t pos = sizeof(kMagic);
    uint32_t hlen = 0;
    for (int i = 0; i < 4; ++i) {
        hlen |= static_cast<uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    }
    pos += 4;
    if (pos + hlen > bytes.size()) {
        throw io_error("checkpoint: truncated header");
    }
    ordered_json header;
    try {
        header = ordered_json::parse(bytes.substr(pos, hlen));
    } catch (const std::exception& e) {
        throw io_error(std::string("checkpoint: malformed header: ") + e.what());
    }
    pos += hlen;

    Checkpoint ckpt;
    ckpt.model.kind = model_kind_from_name(header.at("kind").get<std::string>());
    for (const auto& net_j : header.at("nets")) {
        Network net;
        for (const auto& layer_j : net_j) {
            net.layers.push_back(layer_from_json(layer_j));
        }
        ckpt.model.nets.push_back(std::move(net));
    }
    ckpt.seed = header.at("seed").get<uint64_t>();
    ckpt.step = header.at("step").get<uint64_t>();

    const auto params = model_params(ckpt.model);
    const auto& shapes = header.at("param_shapes");
    if (shapes.size() != params.size()) {
        throw io_error("checkpoint: parameter shape list does not match topology");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (shapes[i].get<std::vector<std::size_t>>() != params[i]->shape()) {
            throw io_error("checkpoint: stored shape disagrees with layer spec");
        }
    }
    for (Tensor* p : params) {
        read_f64_block(bytes, pos, *p);
    }
    if (!header.at("adam").is_null()) {
        const auto& aj = header.at("adam");
        AdamHyper hyper;
        hyper.lr = aj.at("lr").get<double>();
        hyper.beta1 = aj.at("beta1").get<double>();
        hyper.beta2 = aj.at("beta2").get<double>();
        hyper.eps = aj.at("eps").get<double>();
        AdamState state = AdamState::for_params(model_params(std::as_const(ckpt.model)), hyper);
        state.step = aj.at("step").get<uint64_t>();
        for (Tensor& t : state.m) read_f64_block(bytes, pos, t);
        for (Tensor& t : state.v) read_f64_block(bytes, pos, t);
        ckpt.adam = std::move(state);
    }
    if (pos != bytes.size()) {
        throw io_error("checkpoint: trailing bytes after payload");
    }
    return ckpt;
}

}  // namespace idcap
