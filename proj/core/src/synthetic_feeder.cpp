#include "lvse/feeder_io.hpp"

namespace lvse::net {

std::string_view two_node_feeder_text() {
  return R"(# MV source, 800 kVA D-Yg transformer, one 4x100 span to a consumer.
[nodes]
mv,source,abc
lv,junction,abcn
load,consumer,abcn

[branches]
lv,load,4x100,1.0

[transformer]
mv,lv,800000,11000,416,0.004,0.04,-30

[loads]
load,a,5000,1643.3908

[grounding]
lv
)";
}

std::string_view synthetic_feeder_text() {
  return R"(# Synthetic unbalanced LV feeder: two 4x100 mains with 2x22 service drops.
# Neutral grounded only at the substation.
[nodes]
mv,source,abc
lv,junction,abcn
p1,junction,abcn
p2,junction,abcn
p3,junction,abcn
p4,junction,abcn
p5,junction,abcn
p6,junction,abcn
h01,consumer,an
h02,consumer,bn
h03,consumer,an
h04,consumer,abcn
h05,consumer,an
h06,consumer,cn
h07,consumer,an
h08,consumer,bn
h09,consumer,abcn
h10,consumer,an
h11,consumer,bn
h12,consumer,an

[branches]
lv,p1,4x100,0.0048
p1,p2,4x100,0.0042
p2,p3,4x100,0.0036
lv,p4,4x100,0.0054
p4,p5,4x100,0.0042
p5,p6,4x100,0.0036
p1,h01,2x22,0.0024
p1,h02,2x22,0.0030
p2,h03,2x22,0.0024
p2,h04,4x100,0.0018
p3,h05,2x22,0.0036
p3,h06,2x22,0.0024
p4,h07,2x22,0.0030
p4,h08,2x22,0.0024
p5,h09,4x100,0.0024
p5,h10,2x22,0.0030
p6,h11,2x22,0.0024
p6,h12,2x22,0.0036

[transformer]
mv,lv,800000,11000,416,0.004,0.04,-30

[loads]
h01,a,5200,1709.1
h02,b,4300,1413.3
h03,a,6100,2005.0
h04,abc,15000,4930.2
h05,a,4800,1577.7
h06,c,3900,1281.9
h07,a,5600,1840.6
h08,b,4500,1479.1
h09,abc,12000,3944.2
h10,a,6400,2103.6
h11,b,3700,1216.1
h12,a,5000,1643.4

[grounding]
lv
)";
}

GridModel synthetic_feeder() { return parse_feeder(synthetic_feeder_text(), "<synthetic>"); }

}  // namespace lvse::net
