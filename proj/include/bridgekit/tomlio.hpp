#ifndef BRIDGEKIT_TOMLIO_HPP
#define BRIDGEKIT_TOMLIO_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace bridgekit::toml {

// Minimal TOML subset: top-level and [dotted.table] sections, key = value
// with strings, integers, floats, booleans, and flat arrays. Enough for the
// experiment configs; floats are written with 17 significant digits so a
// write/parse cycle is lossless.

class Value;
using Array = std::vector<Value>;
using Table = std::map<std::string, Value>;

class Value {
  public:
    Value() : v_(std::int64_t{0}) {}
    Value(bool b) : v_(b) {}
    Value(std::int64_t i) : v_(i) {}
    Value(int i) : v_(static_cast<std::int64_t>(i)) {}
    Value(double d) : v_(d) {}
    Value(const char* s) : v_(std::string(s)) {}
    Value(std::string s) : v_(std::move(s)) {}
    Value(Array a) : v_(std::move(a)) {}
    Value(Table t) : v_(std::move(t)) {}

    bool is_table() const { return std::holds_alternative<Table>(v_); }
    bool is_array() const { return std::holds_alternative<Array>(v_); }
    bool is_string() const { return std::holds_alternative<std::string>(v_); }
    bool is_int() const { return std::holds_alternative<std::int64_t>(v_); }
    bool is_float() const { return std::holds_alternative<double>(v_); }
    bool is_bool() const { return std::holds_alternative<bool>(v_); }

    const Table& table() const;
    Table& table();
    const Array& array() const;
    const std::string& str() const;
    std::int64_t integer() const;
    double number() const;  // accepts int or float
    bool boolean() const;

  private:
    std::variant<bool, std::int64_t, double, std::string, Array, Table> v_;
};

struct ParseError : std::runtime_error {
    ParseError(const std::string& what, int line);
    int line;
};

Table parse(const std::string& text);
Table parse_file(const std::string& path);
std::string serialize(const Table& root);
void write_file(const Table& root, const std::string& path);

// Lookup helpers; *_or variants return the fallback when the key is absent,
// the plain variants throw naming the missing/badly-typed field.
const Value* find(const Table& t, const std::string& key);
double get_number(const Table& t, const std::string& key);
double get_number_or(const Table& t, const std::string& key, double fallback);
std::int64_t get_int(const Table& t, const std::string& key);
std::int64_t get_int_or(const Table& t, const std::string& key, std::int64_t fallback);
std::string get_string(const Table& t, const std::string& key);
std::string get_string_or(const Table& t, const std::string& key, std::string fallback);
bool get_bool_or(const Table& t, const std::string& key, bool fallback);
std::vector<double> get_number_array_or(const Table& t, const std::string& key,
                                        std::vector<double> fallback);
const Table& get_table(const Table& t, const std::string& key);
const Table* find_table(const Table& t, const std::string& key);

std::string format_double(double d);  // 17 significant digits

}  // namespace bridgekit::toml

#endif
