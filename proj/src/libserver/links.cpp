#include "mo/libserver/links.hpp"

namespace mo {

net::CallResult SimLocalLink::call(net::Message request) {
    return net_.local_call(server_, client_, std::move(request));
}

} // namespace mo
