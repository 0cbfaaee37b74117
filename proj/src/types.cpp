#include "valae/types.hpp"

#include <algorithm>

namespace valae {

StateSet normalize_set(StateSet s) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

bool set_contains(const StateSet& s, StateId x) {
    return std::binary_search(s.begin(), s.end(), x);
}

bool is_subset(const StateSet& a, const StateSet& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

} // namespace valae
