#pragma once

#include "wlab/kernels.hpp"

namespace wlab::kernels::detail {

extern const Table kScalarTable;
extern const Table kAvx2Table;
extern const bool kAvx2Compiled;

}  // namespace wlab::kernels::detail
