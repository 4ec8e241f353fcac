#pragma once

#include "mvb2b/kernels.hpp"

namespace mvb2b::kernels::detail {

const Table& scalar_table() noexcept;
#if defined(MVB2B_HAVE_AVX2)
const Table& avx2_table() noexcept;
#endif
#if defined(MVB2B_HAVE_NEON)
const Table& neon_table() noexcept;
#endif

}  // namespace mvb2b::kernels::detail
