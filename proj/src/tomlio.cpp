#include "bridgekit/tomlio.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bridgekit::toml {

const Table& Value::table() const {
    if (!is_table()) throw std::runtime_error("toml: value is not a table");
    return std::get<Table>(v_);
}

Table& Value::table() {
    if (!is_table()) throw std::runtime_error("toml: value is not a table");
    return std::get<Table>(v_);
}

const Array& Value::array() const {
    if (!is_array()) throw std::runtime_error("toml: value is not an array");
    return std::get<Array>(v_);
}

const std::string& Value::str() const {
    if (!is_string()) throw std::runtime_error("toml: value is not a string");
    return std::get<std::string>(v_);
}

std::int64_t Value::integer() const {
    if (!is_int()) throw std::runtime_error("toml: value is not an integer");
    return std::get<std::int64_t>(v_);
}

double Value::number() const {
    if (is_int()) return static_cast<double>(std::get<std::int64_t>(v_));
    if (is_float()) return std::get<double>(v_);
    throw std::runtime_error("toml: value is not a number");
}

bool Value::boolean() const {
    if (!is_bool()) throw std::runtime_error("toml: value is not a boolean");
    return std::get<bool>(v_);
}

ParseError::ParseError(const std::string& what, int line_no)
    : std::runtime_error("toml parse error (line " + std::to_string(line_no) + "): " + what),
      line(line_no) {}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// strips a trailing comment that is not inside a string literal
std::string strip_comment(const std::string& s) {
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_str = !in_str;
        if (s[i] == '#' && !in_str) return s.substr(0, i);
    }
    return s;
}

Value parse_scalar(const std::string& raw, int line) {
    const std::string s = trim(raw);
    if (s.empty()) throw ParseError("empty value", line);
    if (s.front() == '"') {
        if (s.size() < 2 || s.back() != '"')
            throw ParseError("unterminated string", line);
        std::string out;
        for (std::size_t i = 1; i + 1 < s.size(); ++i) {
            if (s[i] == '\\' && i + 2 < s.size()) {
                ++i;
                switch (s[i]) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    default: throw ParseError("unsupported escape", line);
                }
            } else {
                out += s[i];
            }
        }
        return Value(std::move(out));
    }
    if (s == "true") return Value(true);
    if (s == "false") return Value(false);
    // integer if it parses fully without . e E inf nan
    const bool looks_float = s.find_first_of(".eE") != std::string::npos ||
                             s.find("inf") != std::string::npos ||
                             s.find("nan") != std::string::npos;
    try {
        std::size_t used = 0;
        if (!looks_float) {
            const std::int64_t i = std::stoll(s, &used);
            if (used == s.size()) return Value(i);
        }
        const double d = std::stod(s, &used);
        if (used == s.size()) return Value(d);
    } catch (const std::exception&) {
    }
    throw ParseError("cannot parse value '" + s + "'", line);
}

Value parse_value(const std::string& raw, int line) {
    const std::string s = trim(raw);
    if (!s.empty() && s.front() == '[') {
        if (s.back() != ']') throw ParseError("unterminated array", line);
        Array arr;
        std::string body = s.substr(1, s.size() - 2);
        std::string item;
        bool in_str = false;
        for (char ch : body) {
            if (ch == '"') in_str = !in_str;
            if (ch == ',' && !in_str) {
                if (!trim(item).empty()) arr.push_back(parse_scalar(item, line));
                item.clear();
            } else {
                item += ch;
            }
        }
        if (!trim(item).empty()) arr.push_back(parse_scalar(item, line));
        return Value(std::move(arr));
    }
    return parse_scalar(s, line);
}

Table* descend(Table& root, const std::string& dotted, int line) {
    Table* cur = &root;
    std::stringstream ss(dotted);
    std::string part;
    while (std::getline(ss, part, '.')) {
        part = trim(part);
        if (part.empty()) throw ParseError("empty table-name component", line);
        auto it = cur->find(part);
        if (it == cur->end()) {
            auto [ins, ok] = cur->emplace(part, Value(Table{}));
            (void)ok;
            it = ins;
        } else if (!it->second.is_table()) {
            throw ParseError("key '" + part + "' already holds a non-table value", line);
        }
        cur = &it->second.table();
    }
    return cur;
}

void serialize_value(std::ostream& os, const Value& v) {
    if (v.is_string()) {
        os << '"';
        for (char ch : v.str()) {
            switch (ch) {
                case '"': os << "\\\""; break;
                case '\\': os << "\\\\"; break;
                case '\n': os << "\\n"; break;
                case '\t': os << "\\t"; break;
                default: os << ch;
            }
        }
        os << '"';
    } else if (v.is_bool()) {
        os << (v.boolean() ? "true" : "false");
    } else if (v.is_int()) {
        os << v.integer();
    } else if (v.is_float()) {
        os << format_double(v.number());
    } else if (v.is_array()) {
        os << '[';
        const Array& a = v.array();
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (i) os << ", ";
            serialize_value(os, a[i]);
        }
        os << ']';
    } else {
        throw std::runtime_error("toml serialize: nested table used as a value");
    }
}

void serialize_table(std::ostream& os, const Table& t, const std::string& prefix) {
    // scalars and arrays first, then subtables
    for (const auto& [key, val] : t) {
        if (val.is_table()) continue;
        os << key << " = ";
        serialize_value(os, val);
        os << '\n';
    }
    for (const auto& [key, val] : t) {
        if (!val.is_table()) continue;
        const std::string name = prefix.empty() ? key : prefix + "." + key;
        os << '\n' << '[' << name << "]\n";
        serialize_table(os, val.table(), name);
    }
}

}  // namespace

Table parse(const std::string& text) {
    Table root;
    Table* cur = &root;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string s = trim(strip_comment(line));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ParseError("unterminated table header", line_no);
            const std::string name = trim(s.substr(1, s.size() - 2));
            if (name.empty()) throw ParseError("empty table name", line_no);
            cur = descend(root, name, line_no);
            continue;
        }
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
        const std::string key = trim(s.substr(0, eq));
        if (key.empty()) throw ParseError("empty key", line_no);
        if (cur->count(key)) throw ParseError("duplicate key '" + key + "'", line_no);
        cur->emplace(key, parse_value(s.substr(eq + 1), line_no));
    }
    return root;
}

Table parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("toml: cannot open " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return parse(buf.str());
}

std::string serialize(const Table& root) {
    std::ostringstream os;
    serialize_table(os, root, "");
    return os.str();
}

void write_file(const Table& root, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("toml: cannot open " + path + " for writing");
    f << serialize(root);
}

std::string format_double(double d) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", d);
    std::string s(buf);
    // ensure the token re-parses as a float, not an integer
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

const Value* find(const Table& t, const std::string& key) {
    auto it = t.find(key);
    return it == t.end() ? nullptr : &it->second;
}

double get_number(const Table& t, const std::string& key) {
    const Value* v = find(t, key);
    if (!v) throw std::runtime_error("config: missing field '" + key + "'");
    return v->number();
}

double get_number_or(const Table& t, const std::string& key, double fallback) {
    const Value* v = find(t, key);
    return v ? v->number() : fallback;
}

std::int64_t get_int(const Table& t, const std::string& key) {
    const Value* v = find(t, key);
    if (!v) throw std::runtime_error("config: missing field '" + key + "'");
    return v->integer();
}

std::int64_t get_int_or(const Table& t, const std::string& key, std::int64_t fallback) {
    const Value* v = find(t, key);
    return v ? v->integer() : fallback;
}

std::string get_string(const Table& t, const std::string& key) {
    const Value* v = find(t, key);
    if (!v) throw std::runtime_error("config: missing field '" + key + "'");
    return v->str();
}

std::string get_string_or(const Table& t, const std::string& key, std::string fallback) {
    const Value* v = find(t, key);
    return v ? v->str() : fallback;
}

bool get_bool_or(const Table& t, const std::string& key, bool fallback) {
    const Value* v = find(t, key);
    return v ? v->boolean() : fallback;
}

std::vector<double> get_number_array_or(const Table& t, const std::string& key,
                                        std::vector<double> fallback) {
    const Value* v = find(t, key);
    if (!v) return fallback;
    std::vector<double> out;
    for (const Value& item : v->array()) out.push_back(item.number());
    return out;
}

const Table& get_table(const Table& t, const std::string& key) {
    const Value* v = find(t, key);
    if (!v || !v->is_table())
        throw std::runtime_error("config: missing table '" + key + "'");
    return v->table();
}

const Table* find_table(const Table& t, const std::string& key) {
    const Value* v = find(t, key);
    return v && v->is_table() ? &v->table() : nullptr;
}

}  // namespace bridgekit::toml
