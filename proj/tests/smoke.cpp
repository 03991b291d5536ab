#include <cstdio>
#include "fv/distributions.hpp"
#include "fv/kernels.hpp"
#include "fv/rng.hpp"
int main() {
    fv::GaussianPosterior p{{1.0}, {0.0}};
    std::printf("kl=%g\n", fv::kl_to_standard_normal(p));
    fv::CounterRng r(0);
    std::printf("u64=%llu\n", (unsigned long long)r.next_u64());
    float A[4] = {1, 2, 3, 4}, B[4] = {5, 6, 7, 8}, C[4];
    fv::kernels::gemm_nn(A, B, C, 2, 2, 2, false, false);
    std::printf("C=%g %g %g %g\n", C[0], C[1], C[2], C[3]);
    return 0;
}
