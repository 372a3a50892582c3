#ifndef ATE_JSONIO_HPP
#define ATE_JSONIO_HPP

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace ate {

// Minimal JSON value with insertion-ordered objects and 17-significant-digit
// number formatting, so identical runs serialize byte-identically.
class JsonValue {
public:
    enum class Kind { Null, Bool, Number, Int, String, Array, Object };

    JsonValue() : kind_(Kind::Null) {}
    static JsonValue boolean(bool b);
    static JsonValue number(double v);
    static JsonValue integer(long long v);
    static JsonValue string(std::string s);
    static JsonValue array();
    static JsonValue object();

    void push_back(JsonValue v);                      // arrays
    JsonValue& set(const std::string& key, JsonValue v);  // objects

    std::string dump(int indent = 2) const;

private:
    Kind kind_;
    bool bool_ = false;
    double num_ = 0.0;
    long long int_ = 0;
    std::string str_;
    std::vector<JsonValue> items_;
    std::vector<std::pair<std::string, JsonValue>> fields_;

    void write(std::string& out, int indent, int depth) const;
};

void write_text_file(const std::string& path, const std::string& content);

}  // namespace ate

#endif
