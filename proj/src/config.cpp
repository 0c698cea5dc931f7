#include "carbonsched/config.hpp"

#include <cctype>
#include <limits>

#include "carbonsched/csv.hpp"

namespace carbonsched {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string_view strip_comment(std::string_view line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

class ValueParser {
public:
    ValueParser(std::string_view text, const std::string& source, std::size_t line)
        : text_(text), source_(source), line_(line) {}

    ConfigValue parse() {
        ConfigValue v;
        v.line = line_;
        skip_ws();
        if (peek() == '[') {
            ++pos_;
            v.is_list = true;
            skip_ws();
            if (peek() == ']') {
                ++pos_;
            } else {
                for (;;) {
                    v.items.push_back(scalar());
                    skip_ws();
                    if (peek() == ',') {
                        ++pos_;
                        skip_ws();
                        if (peek() == ']') {
                            ++pos_;
                            break;
                        }
                        continue;
                    }
                    if (peek() == ']') {
                        ++pos_;
                        break;
                    }
                    fail("expected ',' or ']' in list");
                }
            }
        } else {
            v.items.push_back(scalar());
        }
        skip_ws();
        if (pos_ != text_.size()) fail("trailing characters after value");
        return v;
    }

private:
    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    [[noreturn]] void fail(const std::string& what) const { throw DataError(source_, line_, what); }

    ConfigScalar scalar() {
        if (peek() == '"') {
            ++pos_;
            std::string s;
            while (pos_ < text_.size() && text_[pos_] != '"') {
                if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
                    ++pos_;
                    const char e = text_[pos_];
                    s.push_back(e == 'n' ? '\n' : e == 't' ? '\t' : e);
                } else {
                    s.push_back(text_[pos_]);
                }
                ++pos_;
            }
            if (pos_ >= text_.size()) fail("unterminated string");
            ++pos_;
            return {s};
        }
        const std::size_t start = pos_;
        while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != ']') ++pos_;
        const std::string_view tok = trim(text_.substr(start, pos_ - start));
        if (tok == "true") return {true};
        if (tok == "false") return {false};
        if (tok == "inf" || tok == "+inf") return {std::numeric_limits<double>::infinity()};
        if (auto d = parse_double(tok)) return {*d};
        fail("cannot parse value '" + std::string(tok) + "'");
    }

    std::string_view text_;
    const std::string& source_;
    std::size_t line_;
    std::size_t pos_ = 0;
};

}  // namespace

ConfigDocument ConfigDocument::parse(std::string_view text, std::string source) {
    ConfigDocument doc;
    doc.source_ = std::move(source);
    std::size_t line_no = 0;
    while (!text.empty()) {
        const std::size_t nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') throw DataError(doc.source_, line_no, "tables are not supported");
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) throw DataError(doc.source_, line_no, "expected 'key = value'");
        std::string key(trim(line.substr(0, eq)));
        if (key.empty()) throw DataError(doc.source_, line_no, "empty key");
        if (doc.entries_.count(key)) throw DataError(doc.source_, line_no, "duplicate key '" + key + "'");
        doc.entries_[key] = ValueParser(line.substr(eq + 1), doc.source_, line_no).parse();
    }
    return doc;
}

ConfigDocument ConfigDocument::read(const std::filesystem::path& path) {
    return parse(read_file(path), path.string());
}

const ConfigValue* ConfigDocument::find(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

}  // namespace carbonsched
