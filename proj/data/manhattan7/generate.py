"""Regenerates the synthetic manhattan7 dataset files in this directory."""
import csv
import json
import math
from pathlib import Path

HERE = Path(__file__).resolve().parent
HOURS = 24
POLLUTANTS = ["CO2", "SO2", "NOx", "CH4", "PM2.5"]

# id, income $/yr, population, max load MW, shape, published survey value or placeholder
BUSES = [
    (1, 92000.0, 61000.0, 300.0, "mixed", False),
    (2, 78000.0, 118000.0, 420.0, "commercial", False),
    (3, 38304.0, 206707.0, 742.0, "commercial", True),
    (4, 14896.0, 479911.0, 855.0, "flat", True),
    (5, 24022.0, 596438.0, 314.0, "residential", True),
    (6, 31316.0, 29266.0, 188.0, "spiky", True),
    (7, 108000.0, 39000.0, 260.0, "mixed", False),
]


def shape(kind, h):
    day = 0.5 - 0.5 * math.cos(2.0 * math.pi * (h - 3) / 24.0)  # 0 at 03:00, 1 at 15:00
    evening = math.exp(-((h - 19) ** 2) / 8.0)
    if kind == "commercial":
        return 0.42 + 0.58 * day
    if kind == "flat":
        return 0.74 + 0.26 * day
    if kind == "residential":
        return 0.50 + 0.20 * day + 0.30 * evening
    if kind == "spiky":
        return 0.10 + 0.25 * day + 0.65 * evening
    return 0.55 + 0.45 * day


def lmp(h):
    return round(22.0 + 38.0 * (0.6 * (0.5 - 0.5 * math.cos(2.0 * math.pi * (h - 4) / 24.0))
                               + 0.4 * math.exp(-((h - 18) ** 2) / 6.0)), 2)


def main():
    buses = []
    for bid, inc, pop, pmax, kind, _ in BUSES:
        buses.append({
            "id": bid, "v_min2": 0.81, "v_max2": 1.21, "population": pop, "household_size": 2.5,
            "income": inc, "elasticity": 0.6, "tariff_min": 16.8, "tariff_max": 150.0, "max_load_mw": pmax,
        })
    lines = [
        {"from": 1, "to": 2, "r": 0.0008, "x": 0.0016, "s_max_mva": 2300.0},
        {"from": 2, "to": 3, "r": 0.0010, "x": 0.0020, "s_max_mva": 1000.0},
        {"from": 2, "to": 4, "r": 0.0012, "x": 0.0022, "s_max_mva": 930.0},
        {"from": 1, "to": 5, "r": 0.0015, "x": 0.0030, "s_max_mva": 700.0},
        {"from": 5, "to": 6, "r": 0.0020, "x": 0.0035, "s_max_mva": 400.0},
        {"from": 1, "to": 7, "r": 0.0015, "x": 0.0030, "s_max_mva": 500.0},
    ]
    gens = [
        {"id": 1, "bus": 3, "cost": 31.0, "p_min": 0.0, "p_max": 420.0, "q_min": -200.0, "q_max": 200.0,
         "emissions": {"CO2": 0.37, "SO2": 0.00002, "NOx": 0.00012, "CH4": 0.00001, "PM2.5": 0.00004}},
        {"id": 2, "bus": 4, "cost": 66.0, "p_min": 0.0, "p_max": 300.0, "q_min": -150.0, "q_max": 150.0,
         "emissions": {"CO2": 0.56, "SO2": 0.00005, "NOx": 0.00040, "CH4": 0.00002, "PM2.5": 0.00008}},
        {"id": 3, "bus": 6, "cost": 47.0, "p_min": 0.0, "p_max": 220.0, "q_min": -100.0, "q_max": 100.0,
         "emissions": {"CO2": 0.72, "SO2": 0.00110, "NOx": 0.00060, "CH4": 0.00003, "PM2.5": 0.00010}},
        {"id": 4, "bus": 5, "cost": 4.0, "p_min": 0.0, "p_max": 120.0, "q_min": -40.0, "q_max": 40.0,
         "emissions": {}},
    ]
    net = {"base_mva": 100.0, "root": 1, "pollutants": POLLUTANTS, "interface": {"flow_limit_mw": 2600.0},
           "buses": buses, "lines": lines, "generators": gens}
    (HERE / "network.json").write_text(json.dumps(net, indent=2) + "\n")

    with open(HERE / "demand.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["bus", "rep_day", "hour", "p_mw", "q_mvar"])
        for bid, _, _, pmax, kind, _ in BUSES:
            for h in range(HOURS):
                p = round(0.97 * pmax * shape(kind, h), 3)
                w.writerow([bid, 0, h, p, round(0.3 * p, 3)])

    with open(HERE / "lmp.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["rep_day", "hour", "lmp_usd_per_mwh"] + [p + "_t" for p in POLLUTANTS])
        for h in range(HOURS):
            scale = 0.8 + 0.4 * (0.5 - 0.5 * math.cos(2.0 * math.pi * (h - 4) / 24.0))
            w.writerow([0, h, lmp(h), round(610.0 * scale, 3), round(0.05 * scale, 5), round(0.21 * scale, 5),
                        round(0.012 * scale, 5), round(0.018 * scale, 5)])

    health = {"SO2": 41000.0, "NOx": 16500.0, "CH4": 900.0, "PM2.5": 235000.0}
    spread = {1: 1.00, 2: 1.05, 3: 1.12, 4: 1.25, 5: 1.18, 6: 0.95, 7: 0.90}
    with open(HERE / "external_costs.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["pollutant", "bus", "usd_per_tonne"])
        for p in POLLUTANTS[1:]:
            for bid, *_ in BUSES:
                w.writerow([p, bid, round(health[p] * spread[bid], 2)])
            w.writerow([p, "T", round(0.45 * health[p], 2)])
        w.writerow(["gamma", "", 15.0])
        w.writerow(["gamma_sc", "", 51.0])

    pol = {
        "eb_regulator": 0.09,
        "eb_household": 0.005,
        "tou_ratio": 1.0,
        "rate_of_return": 0.11,
        "capital": {"present_value_usd": CAPITAL_PV, "years": 20, "discount_rate": 0.05},
        "avg_tariff_cap_usd_per_mwh": 45.0,
        "peak_hours": list(range(8, 24)),
        "offpeak_hours": list(range(0, 8)),
        "weights": [1.0, 1.0, 1.0],
        "rep_day_weights": [1.0],
        "allow_export": False,
        "solver": {"rho_init": 1.0, "rho_shrink": 0.1, "rho_final": 1e-8, "max_outer": 30},
    }
    (HERE / "policy.json").write_text(json.dumps(pol, indent=2) + "\n")


CAPITAL_PV = 2.2e8

if __name__ == "__main__":
    main()
