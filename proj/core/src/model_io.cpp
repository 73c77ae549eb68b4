#include "stacktier/model_io.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "stacktier/common.hpp"

namespace stacktier {

namespace {

using nlohmann::json;

json spec_to_json(const LearnerSpec& spec) {
    json j;
    j["family"] = family_name(spec.family);
    j["params"] = spec.params;
    return j;
}

LearnerSpec spec_from_json(const json& j) {
    LearnerSpec spec;
    spec.family = family_from_name(j.at("family").get<std::string>());
    spec.params = j.at("params").get<std::map<std::string, double>>();
    return spec;
}

json model_to_json(const FittedModel& m) {
    json j;
    j["family"] = family_name(m.family);
    j["n_features"] = m.n_features;
    j["train_seed"] = m.train_seed;
    j["converged"] = m.converged;
    j["base_margin"] = m.base_margin;
    json trees = json::array();
    for (const auto& tree : m.trees) {
        json nodes = json::array();
        for (const auto& node : tree)
            nodes.push_back(json::array(
                {node.feature, node.threshold, node.left, node.right, node.value}));
        trees.push_back(std::move(nodes));
    }
    j["trees"] = std::move(trees);
    j["weights"] = m.weights;
    j["bias"] = m.bias;
    j["calibration"] = m.calibration;
    return j;
}

FittedModel model_from_json(const json& j) {
    FittedModel m;
    m.family = family_from_name(j.at("family").get<std::string>());
    m.n_features = j.at("n_features").get<std::size_t>();
    m.train_seed = j.at("train_seed").get<std::uint64_t>();
    m.converged = j.at("converged").get<bool>();
    m.base_margin = j.at("base_margin").get<double>();
    for (const auto& nodes : j.at("trees")) {
        std::vector<TreeNode> tree;
        tree.reserve(nodes.size());
        for (const auto& n : nodes) {
            TreeNode node;
            node.feature = n.at(0).get<int>();
            node.threshold = n.at(1).get<double>();
            node.left = n.at(2).get<int>();
            node.right = n.at(3).get<int>();
            node.value = n.at(4).get<double>();
            tree.push_back(node);
        }
        m.trees.push_back(std::move(tree));
    }
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.calibration = j.at("calibration").get<double>();
    return m;
}

json preprocessing_to_json(const Preprocessing& p) {
    json j;
    j["raw_feature_names"] = p.raw_feature_names;
    j["label_column"] = p.label_column;
    j["missing_tokens"] = p.missing_tokens;
    j["kept_features"] = p.kept_features;
    j["impute_means"] = p.impute_means;
    j["standardizer"] = {{"mean", p.standardizer.mean},
                         {"scale", p.standardizer.scale},
                         {"constant_flag", p.standardizer.constant_flag}};
    return j;
}

Preprocessing preprocessing_from_json(const json& j) {
    Preprocessing p;
    p.raw_feature_names = j.at("raw_feature_names").get<std::vector<std::string>>();
    p.label_column = j.at("label_column").get<std::string>();
    p.missing_tokens = j.at("missing_tokens").get<std::vector<std::string>>();
    p.kept_features = j.at("kept_features").get<std::vector<std::size_t>>();
    p.impute_means = j.at("impute_means").get<std::vector<double>>();
    const auto& s = j.at("standardizer");
    p.standardizer.mean = s.at("mean").get<std::vector<double>>();
    p.standardizer.scale = s.at("scale").get<std::vector<double>>();
    p.standardizer.constant_flag =
        s.at("constant_flag").get<std::vector<std::uint8_t>>();
    return p;
}

json stack_to_json(const InternalStack& s) {
    json j;
    j["family"] = family_name(s.family);
    json specs = json::array(), members = json::array();
    for (const auto& spec : s.member_specs) specs.push_back(spec_to_json(spec));
    for (const auto& m : s.members) members.push_back(model_to_json(m));
    j["member_specs"] = std::move(specs);
    j["members"] = std::move(members);
    j["combiner_kind"] = combiner_name(s.combiner_kind);
    j["combiner"] = model_to_json(s.combiner);
    return j;
}

InternalStack stack_from_json(const json& j) {
    InternalStack s;
    s.family = family_from_name(j.at("family").get<std::string>());
    for (const auto& spec : j.at("member_specs"))
        s.member_specs.push_back(spec_from_json(spec));
    for (const auto& m : j.at("members")) s.members.push_back(model_from_json(m));
    s.combiner_kind = combiner_from_name(j.at("combiner_kind").get<std::string>());
    s.combiner = model_from_json(j.at("combiner"));
    return s;
}

json two_level_to_json(const TwoLevelModel& m) {
    json j;
    j["type"] = "two_level";
    json stacks = json::array();
    for (const auto& s : m.stacks) stacks.push_back(stack_to_json(s));
    j["stacks"] = std::move(stacks);
    j["meta_kind"] = combiner_name(m.meta_kind);
    j["meta"] = model_to_json(m.meta);
    j["preprocessing"] = preprocessing_to_json(m.preprocessing);
    j["config_fingerprint"] = m.config_fingerprint;
    j["threshold"] = m.threshold;
    return j;
}

json one_level_to_json(const OneLevelModel& m) {
    json j;
    j["type"] = "one_level";
    json specs = json::array(), members = json::array();
    for (const auto& spec : m.member_specs) specs.push_back(spec_to_json(spec));
    for (const auto& mm : m.members) members.push_back(model_to_json(mm));
    j["member_specs"] = std::move(specs);
    j["members"] = std::move(members);
    j["meta_kind"] = combiner_name(m.meta_kind);
    j["meta"] = model_to_json(m.meta);
    j["preprocessing"] = preprocessing_to_json(m.preprocessing);
    j["config_fingerprint"] = m.config_fingerprint;
    j["threshold"] = m.threshold;
    return j;
}

}  // namespace

std::string model_payload_json(const ModelVariant& model) {
    if (std::holds_alternative<TwoLevelModel>(model))
        return two_level_to_json(std::get<TwoLevelModel>(model)).dump();
    return one_level_to_json(std::get<OneLevelModel>(model)).dump();
}

ModelVariant model_from_payload_json(const std::string& payload) {
    json j;
    try {
        j = json::parse(payload);
    } catch (const json::parse_error& e) {
        throw Error(std::string("model: corrupt payload: ") + e.what());
    }
    const std::string type = j.at("type").get<std::string>();
    if (type == "two_level") {
        TwoLevelModel m;
        for (const auto& s : j.at("stacks")) m.stacks.push_back(stack_from_json(s));
        m.meta_kind = combiner_from_name(j.at("meta_kind").get<std::string>());
        m.meta = model_from_json(j.at("meta"));
        m.preprocessing = preprocessing_from_json(j.at("preprocessing"));
        m.config_fingerprint = j.at("config_fingerprint").get<std::uint64_t>();
        m.threshold = j.at("threshold").get<double>();
        return m;
    }
    if (type == "one_level") {
        OneLevelModel m;
        for (const auto& spec : j.at("member_specs"))
            m.member_specs.push_back(spec_from_json(spec));
        for (const auto& mm : j.at("members")) m.members.push_back(model_from_json(mm));
        m.meta_kind = combiner_from_name(j.at("meta_kind").get<std::string>());
        m.meta = model_from_json(j.at("meta"));
        m.preprocessing = preprocessing_from_json(j.at("preprocessing"));
        m.config_fingerprint = j.at("config_fingerprint").get<std::uint64_t>();
        m.threshold = j.at("threshold").get<double>();
        return m;
    }
    throw Error("model: unknown model type '" + type + "'");
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("write: cannot open '" + tmp + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("write: failed writing '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error("write: rename to '" + path + "' failed: " + ec.message());
}

void save_model(const std::string& path, const ModelVariant& model) {
    const std::string payload = model_payload_json(model);
    std::string bytes;
    bytes.reserve(sizeof(kModelMagic) + 2 + 8 + payload.size());
    bytes.append(kModelMagic, sizeof(kModelMagic));
    const std::uint16_t version = kModelFormatVersion;
    for (int i = 0; i < 2; ++i)
        bytes.push_back(static_cast<char>((version >> (8 * i)) & 0xff));
    const std::uint64_t length = payload.size();
    for (int i = 0; i < 8; ++i)
        bytes.push_back(static_cast<char>((length >> (8 * i)) & 0xff));
    bytes += payload;
    write_file_atomic(path, bytes);
}

ModelVariant load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("model: cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    if (bytes.size() < sizeof(kModelMagic) + 2 + 8)
        throw Error("model: file too short '" + path + "'");
    if (std::memcmp(bytes.data(), kModelMagic, sizeof(kModelMagic)) != 0)
        throw Error("model: bad magic in '" + path + "'");
    std::size_t off = sizeof(kModelMagic);
    std::uint16_t version = 0;
    for (int i = 0; i < 2; ++i)
        version |= static_cast<std::uint16_t>(
            static_cast<unsigned char>(bytes[off + static_cast<std::size_t>(i)]))
            << (8 * i);
    off += 2;
    if (version != kModelFormatVersion)
        throw Error("model: unsupported format version " + std::to_string(version));
    std::uint64_t length = 0;
    for (int i = 0; i < 8; ++i)
        length |= static_cast<std::uint64_t>(
            static_cast<unsigned char>(bytes[off + static_cast<std::size_t>(i)]))
            << (8 * i);
    off += 8;
    if (bytes.size() - off != length)
        throw Error("model: payload length mismatch in '" + path + "'");
    return model_from_payload_json(bytes.substr(off));
}

std::string fitted_model_json(const FittedModel& model) {
    return model_to_json(model).dump();
}

const Preprocessing& model_preprocessing(const ModelVariant& model) {
    if (std::holds_alternative<TwoLevelModel>(model))
        return std::get<TwoLevelModel>(model).preprocessing;
    return std::get<OneLevelModel>(model).preprocessing;
}

double model_threshold(const ModelVariant& model) {
    if (std::holds_alternative<TwoLevelModel>(model))
        return std::get<TwoLevelModel>(model).threshold;
    return std::get<OneLevelModel>(model).threshold;
}

std::vector<double> predict_model(const ModelVariant& model, const Dataset& raw) {
    if (std::holds_alternative<TwoLevelModel>(model))
        return predict_two_level(std::get<TwoLevelModel>(model), raw);
    return predict_one_level(std::get<OneLevelModel>(model), raw);
}

}  // namespace stacktier
