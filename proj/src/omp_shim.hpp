#pragma once
// keeps omp_in_parallel() usable in `if` clauses when built without OpenMP

#ifdef _OPENMP
#include <omp.h>
#else
static inline bool omp_in_parallel() { return false; }
#endif
