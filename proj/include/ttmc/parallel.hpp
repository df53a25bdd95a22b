#pragma once

#include <omp.h>

namespace ttmc {

// threads <= 0 means "all available". Every parallel kernel writes
// disjoint output slots and draws from per-item derived RNG streams, so
// results are identical for any thread count.
inline int resolve_threads(int requested) {
    const int hw = omp_get_max_threads();
    return requested <= 0 ? hw : (requested < hw ? requested : hw);
}

}  // namespace ttmc
