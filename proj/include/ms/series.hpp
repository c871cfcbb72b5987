#pragma once

#include <vector>

namespace ms {

using Series = std::vector<double>;

struct LabeledSeries {
    int label = 0;
    Series values;
};

} // namespace ms
