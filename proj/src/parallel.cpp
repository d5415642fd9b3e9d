#include "esvae/parallel.hpp"

namespace esvae {

namespace {
int g_jobs = 0;
}

void set_jobs(int j) { g_jobs = j; }
int jobs() { return g_jobs; }

}  // namespace esvae
