#include "pdbpe/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace pdbpe::io {

using nlohmann::json;

namespace {

constexpr std::int64_t kMaxTimestep = 100'000'000;

std::string location(const std::string& source, std::size_t line) {
    return source + ":" + std::to_string(line) + ": ";
}

std::vector<std::string> split_csv_line(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& text, double& out) {
    if (text.empty()) return false;
    const char* first = text.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size();
}

bool parse_int(const std::string& text, std::int64_t& out) {
    if (text.empty()) return false;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size();
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return in;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Dataset read_data_csv(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw DataError(location(source, 1) + "empty data file");
    if (split_csv_line(line) != std::vector<std::string>{"series_id", "channel", "t", "value"})
        throw DataError(location(source, 1) + "expected header 'series_id,channel,t,value'");

    struct Pending {
        std::string id;
        std::map<std::pair<std::size_t, std::int64_t>, double> cells;  // (channel, t) -> value
        std::int64_t max_t = -1;
    };
    std::vector<std::string> channels;
    std::unordered_map<std::string, std::size_t> channel_index;
    std::vector<Pending> pending;
    std::unordered_map<std::string, std::size_t> series_index;

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 4)
            throw DataError(location(source, line_no) + "expected 4 fields, found " + std::to_string(f.size()));
        if (f[0].empty()) throw DataError(location(source, line_no) + "empty series_id");
        if (f[1].empty()) throw DataError(location(source, line_no) + "empty channel");
        std::int64_t t = 0;
        if (!parse_int(f[2], t) || t < 0 || t > kMaxTimestep)
            throw DataError(location(source, line_no) + "invalid timestep '" + f[2] + "'");

        auto [cit, new_channel] = channel_index.try_emplace(f[1], channels.size());
        if (new_channel) channels.push_back(f[1]);
        auto [sit, new_series] = series_index.try_emplace(f[0], pending.size());
        if (new_series) pending.push_back({f[0], {}, -1});
        Pending& p = pending[sit->second];
        p.max_t = std::max(p.max_t, t);

        const std::string value_text = trim(f[3]);
        double value = 0.0;
        const bool missing = value_text.empty() || value_text == "NA" || value_text == "nan" || value_text == "NaN";
        if (!missing) {
            if (!parse_double(value_text, value) || !std::isfinite(value))
                throw DataError(location(source, line_no) + "invalid value '" + f[3] + "'");
        }
        const auto key = std::make_pair(cit->second, t);
        if (p.cells.contains(key))
            throw DataError(location(source, line_no) + "duplicate entry for series '" + f[0] + "', channel '" +
                            f[1] + "', t=" + f[2]);
        p.cells.emplace(key, missing ? std::numeric_limits<double>::quiet_NaN() : value);
    }
    if (pending.empty()) throw DataError(location(source, line_no) + "data file has no rows");

    Dataset data(channels);
    for (auto& p : pending) {
        TimeSeries s;
        s.id = p.id;
        s.channels = channels;
        const auto len = static_cast<std::size_t>(p.max_t + 1);
        s.values = Matrix(len, channels.size());
        s.mask.assign(len * channels.size(), 0);
        for (const auto& [key, value] : p.cells) {
            const auto [c, t] = key;
            if (std::isnan(value)) continue;
            s.values(static_cast<std::size_t>(t), c) = value;
            s.mask[static_cast<std::size_t>(t) * channels.size() + c] = 1;
        }
        data.add(std::move(s));
    }
    return data;
}

Dataset read_data_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_data_csv(in, path.string());
}

void write_data_csv(std::ostream& out, const Dataset& data) {
    out << "series_id,channel,t,value\n";
    for (const auto& s : data.series()) {
        for (std::size_t c = 0; c < s.num_channels(); ++c) {
            for (std::size_t t = 0; t < s.length(); ++t) {
                if (!s.observed(t, c)) continue;
                out << s.id << ',' << s.channels[c] << ',' << t << ',' << format_double(s.values(t, c)) << '\n';
            }
        }
    }
}

LabelTable read_labels_csv(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw DataError(location(source, 1) + "empty labels file");
    const auto header = split_csv_line(line);
    const bool with_group = header == std::vector<std::string>{"series_id", "label", "group_id"};
    if (!with_group && header != std::vector<std::string>{"series_id", "label"})
        throw DataError(location(source, 1) + "expected header 'series_id,label[,group_id]'");

    LabelTable table;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != header.size())
            throw DataError(location(source, line_no) + "expected " + std::to_string(header.size()) +
                            " fields, found " + std::to_string(f.size()));
        if (f[0].empty()) throw DataError(location(source, line_no) + "empty series_id");
        LabelRow row{trim(f[1]), std::nullopt};
        if (with_group && !trim(f[2]).empty()) row.group_id = trim(f[2]);
        if (!table.emplace(f[0], std::move(row)).second)
            throw DataError(location(source, line_no) + "duplicate label for series '" + f[0] + "'");
    }
    return table;
}

LabelTable read_labels_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_labels_csv(in, path.string());
}

LabelKind detect_label_kind(const LabelTable& labels) {
    std::size_t numeric = 0, text = 0;
    for (const auto& [id, row] : labels) {
        if (row.label.empty()) continue;
        double v = 0.0;
        if (parse_double(row.label, v) && std::isfinite(v))
            ++numeric;
        else
            ++text;
    }
    if (numeric > 0 && text > 0)
        throw DataError("labels mix numeric and categorical values (" + std::to_string(numeric) + " numeric, " +
                        std::to_string(text) + " categorical)");
    return numeric > 0 ? LabelKind::Regression : LabelKind::Classification;
}

void attach_labels(Dataset& data, const LabelTable& labels, LabelKind kind) {
    for (std::size_t i = 0; i < data.size(); ++i) {
        TimeSeries& s = data[i];
        const auto it = labels.find(s.id);
        if (it == labels.end()) continue;
        s.group_id = it->second.group_id;
        if (it->second.label.empty()) continue;
        if (kind == LabelKind::Regression) {
            double v = 0.0;
            if (!parse_double(it->second.label, v))
                throw DataError("label '" + it->second.label + "' of series '" + s.id + "' is not numeric");
            s.label = v;
        } else {
            s.label = it->second.label;
        }
    }
}

void write_features_csv(std::ostream& out, const FeatureMatrix& m) {
    out << "series_id";
    for (const auto& name : m.column_names) out << ',' << name;
    out << '\n';
    for (std::size_t r = 0; r < m.values.rows(); ++r) {
        out << m.row_ids[r];
        for (double v : m.values.row(r)) out << ',' << format_double(v);
        out << '\n';
    }
}

void write_features_csv(const std::filesystem::path& path, const FeatureMatrix& m) {
    std::ostringstream out;
    write_features_csv(out, m);
    write_file_atomic(path, out.str());
}

FeatureMatrix read_features_csv(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw DataError(location(source, 1) + "empty feature file");
    auto header = split_csv_line(line);
    if (header.empty() || header[0] != "series_id")
        throw DataError(location(source, 1) + "expected header starting with 'series_id'");
    FeatureMatrix m;
    m.column_names.assign(header.begin() + 1, header.end());
    std::vector<double> cells;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != header.size())
            throw DataError(location(source, line_no) + "expected " + std::to_string(header.size()) +
                            " fields, found " + std::to_string(f.size()));
        m.row_ids.push_back(f[0]);
        for (std::size_t j = 1; j < f.size(); ++j) {
            double v = 0.0;
            if (!parse_double(f[j], v)) throw DataError(location(source, line_no) + "invalid number '" + f[j] + "'");
            cells.push_back(v);
        }
    }
    m.values = Matrix(m.row_ids.size(), m.column_names.size());
    for (std::size_t r = 0; r < m.row_ids.size(); ++r)
        for (std::size_t c = 0; c < m.column_names.size(); ++c) m.values(r, c) = cells[r * m.column_names.size() + c];
    return m;
}

FeatureMatrix read_features_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_features_csv(in, path.string());
}

void set_config_value(PipelineConfig& config, const std::string& key, const std::string& value) {
    auto as_int = [&](std::int64_t lo, std::int64_t hi) {
        std::int64_t v = 0;
        if (!parse_int(value, v) || v < lo || v > hi)
            throw ConfigError("invalid integer for '" + key + "': '" + value + "'");
        return v;
    };
    auto as_double = [&] {
        double v = 0.0;
        if (!parse_double(value, v) || !std::isfinite(v))
            throw ConfigError("invalid number for '" + key + "': '" + value + "'");
        return v;
    };
    if (key == "K") {
        config.K = static_cast<int>(as_int(std::numeric_limits<int>::min(), std::numeric_limits<int>::max()));
    } else if (key == "W") {
        config.W = static_cast<int>(as_int(std::numeric_limits<int>::min(), std::numeric_limits<int>::max()));
    } else if (key == "P") {
        config.P = as_double();
    } else if (key == "U") {
        config.U = as_double();
    } else if (key == "correlation_threshold") {
        config.correlation_threshold = as_double();
    } else if (key == "iqr_multiplier") {
        config.iqr_multiplier = as_double();
    } else if (key == "variations") {
        config.variations.clear();
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) config.variations.push_back(parse_variation(item));
        }
    } else if (key == "multivariate_mode") {
        config.multivariate_mode = parse_multivariate_mode(value);
    } else if (key == "centroid") {
        if (value == "true" || value == "1")
            config.centroid = true;
        else if (value == "false" || value == "0")
            config.centroid = false;
        else
            throw ConfigError("invalid boolean for 'centroid': '" + value + "'");
    } else if (key == "max_patterns") {
        config.max_patterns = static_cast<std::size_t>(as_int(0, std::numeric_limits<std::int32_t>::max()));
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

PipelineConfig parse_config(std::istream& in, PipelineConfig base, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(location(source, line_no) + "expected 'key = value'");
        try {
            set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(location(source, line_no) + e.what());
        }
    }
    return base;
}

PipelineConfig parse_config(const std::filesystem::path& path, PipelineConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    return parse_config(in, std::move(base), path.string());
}

std::string format_config(const PipelineConfig& c) {
    std::ostringstream out;
    out << "K = " << c.K << "\nW = " << c.W << "\nP = " << format_double(c.P) << "\nU = " << format_double(c.U)
        << "\ncorrelation_threshold = " << format_double(c.correlation_threshold)
        << "\niqr_multiplier = " << format_double(c.iqr_multiplier) << "\nvariations = ";
    for (std::size_t i = 0; i < c.variations.size(); ++i) out << (i ? "," : "") << variation_name(c.variations[i]);
    out << "\nmultivariate_mode = " << multivariate_mode_name(c.multivariate_mode)
        << "\ncentroid = " << (c.centroid ? "true" : "false") << "\nmax_patterns = " << c.max_patterns << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// Model artifact

namespace {

json config_to_json(const PipelineConfig& c) {
    json vars = json::array();
    for (Variation v : c.variations) vars.push_back(variation_name(v));
    return {{"K", c.K},
            {"W", c.W},
            {"P", c.P},
            {"U", c.U},
            {"correlation_threshold", c.correlation_threshold},
            {"iqr_multiplier", c.iqr_multiplier},
            {"variations", vars},
            {"multivariate_mode", multivariate_mode_name(c.multivariate_mode)},
            {"centroid", c.centroid},
            {"max_patterns", c.max_patterns}};
}

PipelineConfig config_from_json(const json& j) {
    PipelineConfig c;
    c.K = j.at("K").get<int>();
    c.W = j.at("W").get<int>();
    c.P = j.at("P").get<double>();
    c.U = j.at("U").get<double>();
    c.correlation_threshold = j.at("correlation_threshold").get<double>();
    c.iqr_multiplier = j.at("iqr_multiplier").get<double>();
    c.variations.clear();
    for (const auto& v : j.at("variations")) c.variations.push_back(parse_variation(v.get<std::string>()));
    c.multivariate_mode = parse_multivariate_mode(j.at("multivariate_mode").get<std::string>());
    c.centroid = j.at("centroid").get<bool>();
    c.max_patterns = j.at("max_patterns").get<std::size_t>();
    c.validate();
    return c;
}

json model_to_json(const FittedModel& m) {
    json channels = json::array();
    for (const ChannelModel& ch : m.channels) {
        json medians = json::array();
        for (const auto& [s, med] : ch.medians.medians) medians.push_back({s, med});
        json variations = json::array();
        for (const VariationModel& vm : ch.variations) {
            json rules = json::array();
            for (const MergeRule& r : vm.vocab.rules())
                rules.push_back({r.new_symbol, r.left, r.right, r.train_frequency, r.train_series_support});
            variations.push_back({{"variation", variation_name(vm.variation)},
                                  {"base_size", vm.vocab.base_size()},
                                  {"rules", rules},
                                  {"emitted", vm.emitted}});
        }
        channels.push_back({{"name", ch.name},
                            {"discretizer",
                             {{"K", ch.discretizer.K},
                              {"lower_fence", ch.discretizer.lower_fence},
                              {"upper_fence", ch.discretizer.upper_fence},
                              {"edges", ch.discretizer.edges}}},
                            {"rcsm_medians", medians},
                            {"variations", variations}});
    }

    json features = json::array();
    for (const FeatureDescriptor& f : m.schema.features) {
        features.push_back({{"name", f.name},
                            {"channel", f.channel},
                            {"variation", variation_name(f.variation)},
                            {"symbol", f.symbol},
                            {"decoded", f.decoded},
                            {"support", f.support}});
    }

    json centroids = nullptr;
    if (m.centroids) {
        centroids = json::array();
        for (const auto& [g, v] : *m.centroids) centroids.push_back({{"group", g}, {"values", v}});
    }

    return {{"format", "pdbpe-model"},
            {"format_version", kModelFormatVersion},
            {"config", config_to_json(m.config)},
            {"input_channels", m.input_channels},
            {"channels", channels},
            {"schema", {{"features", features}, {"keep", m.schema.keep}}},
            {"centroids", centroids}};
}

FittedModel model_from_json(const json& j) {
    if (j.value("format", "") != "pdbpe-model") throw DataError("not a pdbpe model artifact");
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion)
        throw DataError("model format version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kModelFormatVersion) + ")");

    FittedModel m;
    m.config = config_from_json(j.at("config"));
    m.input_channels = j.at("input_channels").get<std::vector<std::string>>();
    for (const auto& jc : j.at("channels")) {
        ChannelModel ch;
        ch.name = jc.at("name").get<std::string>();
        const auto& jd = jc.at("discretizer");
        ch.discretizer.K = jd.at("K").get<int>();
        ch.discretizer.lower_fence = jd.at("lower_fence").get<double>();
        ch.discretizer.upper_fence = jd.at("upper_fence").get<double>();
        ch.discretizer.edges = jd.at("edges").get<std::vector<double>>();
        if (ch.discretizer.K != m.config.K || ch.discretizer.edges.size() != static_cast<std::size_t>(m.config.K) + 1)
            throw DataError("discretizer of stream '" + ch.name + "' does not match K");
        for (const auto& pair : jc.at("rcsm_medians"))
            ch.medians.medians[pair.at(0).get<Symbol>()] = pair.at(1).get<int>();
        for (const auto& jv : jc.at("variations")) {
            VariationModel vm;
            vm.variation = parse_variation(jv.at("variation").get<std::string>());
            vm.vocab = Vocabulary(jv.at("base_size").get<int>());
            if (vm.vocab.base_size() != base_alphabet_size(vm.variation, m.config.K))
                throw DataError("vocabulary base size does not match K");
            for (const auto& r : jv.at("rules")) {
                vm.vocab.add_rule({r.at(0).get<Symbol>(), r.at(1).get<Symbol>(), r.at(2).get<Symbol>(),
                                   r.at(3).get<std::int64_t>(), r.at(4).get<std::int64_t>()});
            }
            vm.emitted = jv.at("emitted").get<std::vector<Symbol>>();
            for (Symbol s : vm.emitted) vm.vocab.decode(s);  // range check
            ch.variations.push_back(std::move(vm));
        }
        m.channels.push_back(std::move(ch));
    }

    const std::size_t streams =
        m.config.multivariate_mode == MultivariateMode::PerChannel ? m.input_channels.size() : 1;
    if (m.channels.size() != streams) throw DataError("model stream count does not match its input channels");

    const auto& js = j.at("schema");
    for (const auto& jf : js.at("features")) {
        FeatureDescriptor f;
        f.name = jf.at("name").get<std::string>();
        f.channel = jf.at("channel").get<std::string>();
        f.variation = parse_variation(jf.at("variation").get<std::string>());
        f.symbol = jf.at("symbol").get<Symbol>();
        f.decoded = jf.at("decoded").get<SymbolSeq>();
        f.support = jf.at("support").get<std::int64_t>();
        m.schema.features.push_back(std::move(f));
    }
    m.schema.keep = js.at("keep").get<Mask>();

    std::size_t expected = 0;
    for (const auto& ch : m.channels)
        for (const auto& vm : ch.variations) expected += vm.emitted.size();
    if (m.schema.features.size() != expected || m.schema.keep.size() != expected)
        throw DataError("feature schema does not match the fitted vocabularies");

    if (!j.at("centroids").is_null()) {
        CentroidTable table;
        for (const auto& jg : j.at("centroids"))
            table.emplace(jg.at("group").get<std::string>(), jg.at("values").get<std::vector<double>>());
        m.centroids = std::move(table);
    }
    return m;
}

}  // namespace

std::string model_to_text(const FittedModel& model) { return model_to_json(model).dump(1) + "\n"; }

FittedModel model_from_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
        return model_from_json(j);
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed model artifact: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const FittedModel& model) {
    write_file_atomic(path, model_to_text(model));
}

FittedModel load_model(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return model_from_text(buf.str());
}

std::uint64_t model_fingerprint(const FittedModel& model) {
    const std::string text = model_to_text(model);
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write '" + path.string() + "'");
        out << contents;
        if (!out) throw DataError("failed writing '" + path.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace pdbpe::io
