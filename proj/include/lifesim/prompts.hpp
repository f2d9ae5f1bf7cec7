#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace lifesim {

// {name} substitutes a binding, {{ and }} render literal braces, and an
// unbound {name} is an error. A lone brace that does not open a well-formed
// placeholder passes through unchanged, so JSON snippets inside templates
// need no escaping.
std::string render_template(std::string_view tpl,
                            const std::map<std::string, std::string>& bindings);

class PromptCatalog {
public:
    PromptCatalog();  // built-in templates

    // Overlays *.txt files (stem = template name) on the built-ins.
    static PromptCatalog from_dir(const std::filesystem::path& dir);

    bool has(std::string_view name) const;
    const std::string& raw(std::string_view name) const;
    std::string render(std::string_view name,
                       const std::map<std::string, std::string>& bindings) const;
    std::vector<std::string> names() const;

private:
    std::map<std::string, std::string, std::less<>> templates_;
};

}  // namespace lifesim
