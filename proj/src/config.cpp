#include "editbench/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <variant>

#include "editbench/error.hpp"
#include "editbench/text.hpp"

namespace editbench {

namespace {

struct Value;
using Array = std::vector<Value>;

struct Value {
    std::variant<bool, std::int64_t, double, std::string, Array> v;
};

class ValueParser {
public:
    ValueParser(std::string_view src, std::string key) : src_(src), key_(std::move(key)) {}

    Value parse_all() {
        auto v = parse();
        skip_ws();
        if (pos_ != src_.size()) fail("trailing characters after value");
        return v;
    }

private:
    [[noreturn]] void fail(const std::string& why) const { throw ConfigError(key_, why); }

    void skip_ws() {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
                ++pos_;
            } else if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    Value parse() {
        skip_ws();
        if (pos_ >= src_.size()) fail("missing value");
        const char c = src_[pos_];
        if (c == '"') return {parse_string()};
        if (c == '\'') return {parse_literal_string()};
        if (c == '[') return {parse_array()};
        if (src_.substr(pos_, 4) == "true") {
            pos_ += 4;
            return {true};
        }
        if (src_.substr(pos_, 5) == "false") {
            pos_ += 5;
            return {false};
        }
        return parse_number();
    }

    std::string parse_string() {
        ++pos_;
        std::string out;
        while (pos_ < src_.size() && src_[pos_] != '"') {
            char c = src_[pos_++];
            if (c == '\n') fail("unterminated string");
            if (c != '\\') {
                out.push_back(c);
                continue;
            }
            if (pos_ >= src_.size()) fail("unterminated escape");
            switch (const char e = src_[pos_++]) {
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case 'r': out.push_back('\r'); break;
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                case 'u': {
                    if (pos_ + 4 > src_.size()) fail("short \\u escape");
                    unsigned cp = 0;
                    auto [p, ec] = std::from_chars(src_.data() + pos_, src_.data() + pos_ + 4, cp, 16);
                    if (ec != std::errc{} || p != src_.data() + pos_ + 4) fail("bad \\u escape");
                    pos_ += 4;
                    out += text::encode_utf8(std::u32string(1, static_cast<char32_t>(cp)));
                    break;
                }
                default: fail(std::string("unknown escape \\") + e);
            }
        }
        if (pos_ >= src_.size()) fail("unterminated string");
        ++pos_;
        return out;
    }

    std::string parse_literal_string() {
        const auto end = src_.find('\'', pos_ + 1);
        if (end == std::string_view::npos) fail("unterminated string");
        std::string out(src_.substr(pos_ + 1, end - pos_ - 1));
        pos_ = end + 1;
        return out;
    }

    Array parse_array() {
        ++pos_;
        Array out;
        for (;;) {
            skip_ws();
            if (pos_ >= src_.size()) fail("unterminated array");
            if (src_[pos_] == ']') {
                ++pos_;
                return out;
            }
            out.push_back(parse());
            skip_ws();
            if (pos_ < src_.size() && src_[pos_] == ',') {
                ++pos_;
            } else if (pos_ >= src_.size() || src_[pos_] != ']') {
                fail("expected ',' or ']' in array");
            }
        }
    }

    Value parse_number() {
        auto start = pos_;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.' ||
                                      src_[pos_] == '-' || src_[pos_] == '+' || src_[pos_] == '_'))
            ++pos_;
        std::string tok;
        for (auto i = start; i < pos_; ++i)
            if (src_[i] != '_') tok.push_back(src_[i]);
        if (tok.empty()) fail("unrecognized value");
        if (tok[0] == '+') tok.erase(0, 1);
        std::int64_t i = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), i);
        if (ec == std::errc{} && p == tok.data() + tok.size()) return {i};
        double d = 0;
        auto [pd, ecd] = std::from_chars(tok.data(), tok.data() + tok.size(), d);
        if (ecd == std::errc{} && pd == tok.data() + tok.size()) return {d};
        fail("unrecognized value '" + tok + "'");
    }

    std::string_view src_;
    std::string key_;
    std::size_t pos_ = 0;
};

const char* type_name(const Value& v) {
    switch (v.v.index()) {
        case 0: return "boolean";
        case 1: return "integer";
        case 2: return "float";
        case 3: return "string";
        default: return "array";
    }
}

[[noreturn]] void wrong_type(const std::string& key, const Value& v, const char* want) {
    throw ConfigError(key, std::string("expected ") + want + ", got " + type_name(v));
}

std::string as_string(const std::string& key, const Value& v) {
    if (auto* s = std::get_if<std::string>(&v.v)) return *s;
    wrong_type(key, v, "string");
}

bool as_bool(const std::string& key, const Value& v) {
    if (auto* b = std::get_if<bool>(&v.v)) return *b;
    wrong_type(key, v, "boolean");
}

std::int64_t as_int(const std::string& key, const Value& v) {
    if (auto* i = std::get_if<std::int64_t>(&v.v)) return *i;
    wrong_type(key, v, "integer");
}

std::size_t as_count(const std::string& key, const Value& v) {
    const auto i = as_int(key, v);
    if (i < 0) throw ConfigError(key, "must be non-negative");
    return static_cast<std::size_t>(i);
}

std::size_t as_positive(const std::string& key, const Value& v) {
    const auto n = as_count(key, v);
    if (n == 0) throw ConfigError(key, "must be positive");
    return n;
}

double as_double(const std::string& key, const Value& v) {
    if (auto* d = std::get_if<double>(&v.v)) return *d;
    if (auto* i = std::get_if<std::int64_t>(&v.v)) return static_cast<double>(*i);
    wrong_type(key, v, "number");
}

std::vector<std::string> as_strings(const std::string& key, const Value& v) {
    auto* arr = std::get_if<Array>(&v.v);
    if (arr == nullptr) wrong_type(key, v, "array of strings");
    std::vector<std::string> out;
    for (const auto& item : *arr) out.push_back(as_string(key, item));
    return out;
}

std::string as_date(const std::string& key, const Value& v) {
    auto s = as_string(key, v);
    if (!is_iso_date(s)) throw ConfigError(key, "expected an ISO date (YYYY-MM-DD), got '" + s + "'");
    return s;
}

std::string one_of(const std::string& key, const Value& v, std::initializer_list<std::string_view> allowed) {
    auto s = as_string(key, v);
    for (auto a : allowed)
        if (s == a) return s;
    std::string list;
    for (auto a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
    throw ConfigError(key, "'" + s + "' is not one of " + list);
}

void set_model(Config& c, QaKind kind, const std::string& key, const Value& v) {
    c.qa.forge.models[kind] = as_string(key, v);
}

void apply(Config& c, const std::string& key, const Value& v) {
    if (key == "seed") {
        c.seed = static_cast<std::uint64_t>(as_int(key, v));
        c.qa.forge.seed = c.seed;
        c.locality.options.hnsw.seed = c.seed;
        c.rag.config.hnsw.seed = c.seed;
    }
    // [ingest]
    else if (key == "ingest.label_lang") c.ingest.label_lang = as_string(key, v);
    else if (key == "ingest.format")
        c.ingest.format = one_of(key, v, {"dump", "tsv"}) == "dump" ? DumpFormat::Dump : DumpFormat::Tsv;
    else if (key == "ingest.source_uri") c.ingest.source_uri = as_string(key, v);
    else if (key == "ingest.spill_threshold") c.diff.memory_threshold = as_positive(key, v);
    else if (key == "ingest.spill_dir") c.diff.spill_dir = as_string(key, v);
    // [filters]
    else if (key == "filters.max_phrase_words") c.filters.max_phrase_words = as_positive(key, v);
    else if (key == "filters.allow_scripts") {
        auto scripts = as_strings(key, v);
        for (const auto& s : scripts)
            if (!script_range(s)) throw ConfigError(key, "unknown repertoire '" + s + "'");
        c.filters.allow_scripts = std::move(scripts);
    } else if (key == "filters.enabled") {
        std::set<FilterRule> rules;
        for (const auto& name : as_strings(key, v)) {
            auto rule = rule_from_name(name);
            if (!rule) throw ConfigError(key, "unknown rule '" + name + "'");
            rules.insert(*rule);
        }
        c.filters.enabled = std::move(rules);
    }
    // [locality]
    else if (key == "locality.mode") c.locality.options.approximate = one_of(key, v, {"exact", "approx"}) == "approx";
    else if (key == "locality.embed_batch") c.locality.options.embed_batch = as_positive(key, v);
    else if (key == "locality.approx_candidates") c.locality.options.approx_candidates = as_positive(key, v);
    else if (key == "locality.ef_search") c.locality.options.hnsw.ef_search = as_positive(key, v);
    // [mhop]
    else if (key == "mhop.enabled") c.mhop.enabled = as_bool(key, v);
    // [qa]
    else if (key == "qa.provider") c.qa.provider = one_of(key, v, {"replay", "http", "record", "formulaic"});
    else if (key == "qa.endpoint") c.qa.endpoint = as_string(key, v);
    else if (key == "qa.replay_dir") c.qa.replay_dir = as_string(key, v);
    else if (key == "qa.template_dir") c.qa.template_dir = as_string(key, v);
    else if (key == "qa.timeout_seconds") c.qa.timeout_seconds = static_cast<int>(as_positive(key, v));
    else if (key == "qa.temperature") c.qa.forge.params.temperature = as_double(key, v);
    else if (key == "qa.max_tokens") c.qa.forge.params.max_tokens = static_cast<int>(as_positive(key, v));
    else if (key == "qa.max_inflight") c.qa.forge.max_inflight = as_positive(key, v);
    else if (key == "qa.max_attempts") c.qa.forge.retry.max_attempts = static_cast<int>(as_positive(key, v));
    else if (key == "qa.base_delay_ms") c.qa.forge.retry.base_delay = std::chrono::milliseconds(as_count(key, v));
    else if (key == "qa.update_model") set_model(c, QaKind::Update, key, v);
    else if (key == "qa.locality_model") set_model(c, QaKind::Locality, key, v);
    else if (key == "qa.rephrase_model") set_model(c, QaKind::Rephrase, key, v);
    else if (key == "qa.persona_model") set_model(c, QaKind::Persona, key, v);
    else if (key == "qa.mhop_model") set_model(c, QaKind::Mhop, key, v);
    // [rag]
    else if (key == "rag.k") c.rag.config.k = as_positive(key, v);
    else if (key == "rag.mode") c.rag.config.mode = *retrieval_mode_from_string(one_of(key, v, {"exact", "approx"}));
    else if (key == "rag.recall_floor") {
        const auto f = as_double(key, v);
        if (f < 0.0 || f > 1.0) throw ConfigError(key, "must lie in [0, 1]");
        c.rag.config.recall_floor = f;
    } else if (key == "rag.separator") c.rag.config.separator = as_string(key, v);
    else if (key == "rag.embedder") c.rag.embedder = one_of(key, v, {"stub", "http"});
    else if (key == "rag.embed_dim") c.rag.embed_dim = as_positive(key, v);
    else if (key == "rag.embed_endpoint") c.rag.embed_endpoint = as_string(key, v);
    else if (key == "rag.embed_batch") c.rag.config.embed_batch = as_positive(key, v);
    // [eval]
    else if (key == "eval.match") c.eval.match = *match_mode_from_string(one_of(key, v, {"exact", "contains"}));
    else if (key == "eval.model") c.eval.model = one_of(key, v, {"http", "subprocess", "copy_first"});
    else if (key == "eval.model_endpoint") c.eval.model_endpoint = as_string(key, v);
    else if (key == "eval.model_command") c.eval.model_command = as_string(key, v);
    else if (key == "eval.max_inflight") c.eval.max_inflight = as_positive(key, v);
    else if (key == "eval.axes") {
        std::vector<EvalAxis> axes;
        for (const auto& name : as_strings(key, v)) {
            auto axis = eval_axis_from_string(name);
            if (!axis) throw ConfigError(key, "unknown axis '" + name + "'");
            axes.push_back(*axis);
        }
        c.eval.axes = std::move(axes);
    } else if (key == "eval.annotations") c.eval.annotations = as_string(key, v);
    else if (key == "eval.bin_key") c.eval.bin_key = one_of(key, v, {"", "fact_year", "subject_count", "object_count"});
    else if (key == "eval.bins") c.eval.bins = as_positive(key, v);
    // [timestep]
    else if (key == "timestep.id") c.timestep.id = as_string(key, v);
    else if (key == "timestep.start") c.timestep.start = as_date(key, v);
    else if (key == "timestep.end") c.timestep.end = as_date(key, v);
    // [limits]
    else if (key == "limits.max_malformed_records") c.limits.max_malformed_records = as_count(key, v);
    else if (key == "limits.max_embed_errors") c.limits.max_embed_errors = as_count(key, v);
    else if (key == "limits.max_transport_failures") c.limits.max_transport_failures = as_count(key, v);
    else if (key == "limits.max_generation_failure_rate") c.limits.max_generation_failure_rate = as_double(key, v);
    else if (key == "limits.max_eval_errors") c.limits.max_eval_errors = as_count(key, v);
    else throw ConfigError(key, "unknown key");
}

// Counts brackets outside strings so multi-line arrays can be gathered.
int bracket_balance(std::string_view s) {
    int depth = 0;
    char quote = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (quote != 0) {
            if (c == '\\' && quote == '"') ++i;
            else if (c == quote) quote = 0;
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '#') {
            while (i + 1 < s.size() && s[i + 1] != '\n') ++i;
        } else if (c == '[') {
            ++depth;
        } else if (c == ']') {
            --depth;
        }
    }
    return depth;
}

bool valid_bare_key(std::string_view k) {
    if (k.empty()) return false;
    for (char c : k)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
    return true;
}

}  // namespace

Config parse_config(std::string_view text) {
    Config config;
    std::string section;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        const auto trimmed = text::trim(line);
        if (trimmed.empty() || trimmed[0] == '#') continue;
        if (trimmed[0] == '[') {
            const auto close = trimmed.find(']');
            if (close == std::string::npos) throw ConfigError("line " + std::to_string(line_no), "unterminated section header");
            section = text::trim(std::string_view(trimmed).substr(1, close - 1));
            const auto rest = text::trim(std::string_view(trimmed).substr(close + 1));
            if (!valid_bare_key(section) || (!rest.empty() && rest[0] != '#'))
                throw ConfigError("line " + std::to_string(line_no), "malformed section header");
            continue;
        }
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no), "expected key = value");
        const auto name = text::trim(std::string_view(trimmed).substr(0, eq));
        if (!valid_bare_key(name)) throw ConfigError("line " + std::to_string(line_no), "malformed key '" + name + "'");
        const auto key = section.empty() ? name : section + "." + name;
        std::string value = trimmed.substr(eq + 1);
        while (bracket_balance(value) > 0 && std::getline(in, line)) {
            ++line_no;
            value += "\n" + line;
        }
        apply(config, key, ValueParser(value, key).parse_all());
    }
    return config;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("--config", "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void apply_override(Config& config, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw ConfigError(std::string(assignment), "override must be key=value");
    const auto key = text::trim(assignment.substr(0, eq));
    const auto raw = assignment.substr(eq + 1);
    Value value;
    try {
        value = ValueParser(raw, key).parse_all();
    } catch (const ConfigError&) {
        value = {text::trim(raw)};
    }
    apply(config, key, value);
}

}  // namespace editbench
