#include "mo/scenario/script.hpp"

namespace mo::scenario {

namespace {

// Three servers share an object M. Every flood is an explicit step so each
// checkpoint shows the state right after one exchange.
constexpr const char* kAbc = R"(# Alice publishes M; Bob and Clare follow it and post news items into it.
server alice flood_on_change=false flood_interval_ms=0
server bob   flood_on_change=false flood_interval_ms=0
server clare flood_on_change=false flood_interval_ms=0

at 0    alice create M news-group
at 0    alice replicate M flooding level=0
at 10   bob   copy M
at 10   bob   fetch M
at 10   bob   replicate M flooding level=0
at 20   clare copy M
at 20   clare fetch M
at 20   clare replicate M flooding level=0

at 100  checkpoint a
at 100  expect alice cluster M =
at 100  expect bob   cluster M =
at 100  expect clare cluster M =
at 100  expect alice peers M =
at 100  expect bob   peers M = alice
at 100  expect clare peers M = alice

at 200  bob create N1 first news item
at 200  bob add M N1
at 300  checkpoint b
at 300  expect bob   cluster M = N1
at 300  expect alice cluster M =

at 400  bob flood M
at 500  checkpoint c
at 500  expect alice cluster M = N1
at 500  expect alice peers M = bob

at 600  clare create N2 second news item
at 600  clare add M N2
at 700  checkpoint d
at 700  expect clare cluster M = N2

at 800  clare flood M
at 900  checkpoint e
at 900  expect alice cluster M = N1 N2
at 900  expect alice peers M = bob clare
at 900  expect clare cluster M = N1 N2
at 900  expect clare peers M = alice

at 1000 alice flood M
at 1100 checkpoint f
at 1100 expect bob cluster M = N1 N2
at 1100 expect bob peers M = alice clare

at 1200 bob flood M
at 1300 checkpoint g
at 1300 expect alice cluster M = N1 N2
at 1300 expect bob   cluster M = N1 N2
at 1300 expect clare cluster M = N1 N2
at 1300 expect alice peers M = bob clare
at 1300 expect bob   peers M = alice clare
at 1300 expect clare peers M = alice bob

# Tokens travel with the cluster; payloads are fetched on demand.
at 1400 clare copy N1
at 1400 clare fetch N1
at 1500 expect clare payload N1 = first news item
)";

// Same story with event-driven flooding and the anti-stale timer.
constexpr const char* kAbcAuto = R"(server alice
server bob
server clare

at 0    alice create M news-group
at 0    alice replicate M flooding level=0
at 10   bob   copy M
at 10   bob   fetch M
at 10   bob   replicate M flooding level=0
at 20   clare copy M
at 20   clare fetch M
at 20   clare replicate M flooding level=0

at 200  bob create N1 first news item
at 200  bob add M N1
at 600  clare create N2 second news item
at 600  clare add M N2

at 3000 checkpoint final
at 3000 expect alice cluster M = N1 N2
at 3000 expect bob   cluster M = N1 N2
at 3000 expect clare cluster M = N1 N2
at 3000 expect alice peers M = bob clare
at 3000 expect bob   peers M = alice clare
at 3000 expect clare peers M = alice bob
)";

} // namespace

std::optional<std::string> builtin_script(std::string_view name) {
    if (name == "abc") return std::string(kAbc);
    if (name == "abc-auto") return std::string(kAbcAuto);
    return std::nullopt;
}

std::vector<std::string> builtin_names() { return {"abc", "abc-auto"}; }

} // namespace mo::scenario
