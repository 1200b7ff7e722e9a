#include "qpr/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace qpr {

namespace {

using Key = std::tuple<std::vector<int>, int, int, int, int>;

std::mutex plan_mutex;
std::map<Key, fftw_plan>& plans() {
  static std::map<Key, fftw_plan> p;
  return p;
}

}  // namespace

void dft(cd* data, const std::vector<int>& dims, int howmany, int stride, int dist, int sign) {
  Key key{dims, howmany, stride, dist, sign};
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto it = plans().find(key);
    if (it == plans().end()) {
      auto* p = reinterpret_cast<fftw_complex*>(data);
      plan = fftw_plan_many_dft(static_cast<int>(dims.size()), dims.data(), howmany, p, nullptr, stride,
                                dist, p, nullptr, stride, dist, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
      plans().emplace(key, plan);
    } else {
      plan = it->second;
    }
  }
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(plan, p, p);
}

}  // namespace qpr
