#include "collide/error.hpp"

namespace collide {

namespace {
std::string join_problems(const std::vector<std::string>& problems)
{
    std::string out;
    for (const auto& p : problems) {
        if (!out.empty())
            out += "; ";
        out += p;
    }
    return out;
}
} // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : Error(join_problems(problems)), problems_(std::move(problems))
{
}

} // namespace collide
