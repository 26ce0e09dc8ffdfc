"""Environmental twin: zone thermals, humidity, airflow, cooling controller.

First-order linear relaxation only — the goal is exercising the
monitoring pipeline with plausible, fully deterministic signals, not
thermal accuracy. State evolution uses no randomness so that composed
steps agree with single steps.
"""

import math
from dataclasses import dataclass, field, replace


def default_zones(count: int = 8) -> tuple[str, ...]:
    return tuple(f"zone{i:02d}" for i in range(1, count + 1))


@dataclass(frozen=True)
class PodConfig:
    zones: tuple[str, ...] = field(default_factory=default_zones)
    feeds: tuple[str, ...] = ("feedA", "feedB")
    ambient_temp: float = 18.0
    ambient_humidity: float = 45.0
    setpoint: float = 27.0
    hysteresis: float = 2.0
    tau_seconds: float = 600.0
    humidity_tau_seconds: float = 900.0
    heat_per_kw: float = 0.035  # equilibrium °C rise per kW of zone IT load
    mech_cooling_drop: float = 6.0
    econ_cooling_drop: float = 2.5
    economizer_limit: float = 22.0  # ambient at or below this enables economizer
    base_pressure: float = 25.0
    overhead_idle: float = 0.05  # facility overhead fraction of IT power
    overhead_econ: float = 0.08
    overhead_mech: float = 0.18


@dataclass(frozen=True)
class PodState:
    """Snapshot of every environmental quantity at one instant."""

    zone_temp: dict[str, float]
    zone_humidity: dict[str, float]
    zone_pressure: dict[str, float]
    zone_airflow: dict[str, float]
    feed_it_kw: dict[str, float]
    feed_spike_kw: dict[str, float]
    facility_kw: float
    mechanical_cooling: bool
    economizer_mode: bool
    water_alarm: bool
    fire_alarm: bool
    sim_clock: float

    def feed_power(self, feed: str) -> float:
        """Register-visible feed power: IT draw plus any injected spike."""
        return self.feed_it_kw[feed] + self.feed_spike_kw.get(feed, 0.0)

    def it_total_kw(self) -> float:
        return sum(self.feed_it_kw.values())


def initial_state(config: PodConfig) -> PodState:
    return PodState(
        zone_temp={z: config.ambient_temp + 2.0 for z in config.zones},
        zone_humidity={z: config.ambient_humidity for z in config.zones},
        zone_pressure={z: config.base_pressure for z in config.zones},
        zone_airflow={z: 3000.0 for z in config.zones},
        feed_it_kw={f: 0.0 for f in config.feeds},
        feed_spike_kw={},
        facility_kw=0.0,
        mechanical_cooling=False,
        economizer_mode=False,
        water_alarm=False,
        fire_alarm=False,
        sim_clock=0.0,
    )


class PodSim:
    """Owns PodState and the active environmental faults."""

    def __init__(self, config: PodConfig):
        self.config = config
        self.state = initial_state(config)
        self.water_zones: set[str] = set()
        self.temp_ramps: dict[str, float] = {}
        self.power_spikes: dict[str, float] = {}
        self.fire = False

    # -- faults --------------------------------------------------------

    def inject_water(self, zone: str) -> None:
        self._check_zone(zone)
        self.water_zones.add(zone)

    def inject_temp_ramp(self, zone: str, rate: float) -> None:
        self._check_zone(zone)
        self.temp_ramps[zone] = rate

    def inject_power_spike(self, feed: str, kw: float) -> None:
        if feed not in self.config.feeds:
            raise KeyError(f"unknown feed {feed!r}")
        self.power_spikes[feed] = self.power_spikes.get(feed, 0.0) + kw

    def inject_fire(self) -> None:
        self.fire = True

    def _check_zone(self, zone: str) -> None:
        if zone not in self.config.zones:
            raise KeyError(f"unknown zone {zone!r}")

    # -- dynamics --------------------------------------------------------

    def step(self, dt: float, zone_it_kw: dict[str, float], feed_it_kw: dict[str, float]) -> PodState:
        """Advance the environmental state by dt seconds.

        Zone temperature relaxes toward ambient plus an IT-load heat
        term (minus the active cooling drop); the cooling bit engages
        above the setpoint and releases below setpoint - hysteresis.
        """
        if dt <= 0:
            raise ValueError("dt must be > 0")
        cfg = self.config
        s = self.state
        decay = 1.0 - math.exp(-dt / cfg.tau_seconds)
        h_decay = 1.0 - math.exp(-dt / cfg.humidity_tau_seconds)

        temps: dict[str, float] = {}
        hums: dict[str, float] = {}
        press: dict[str, float] = {}
        flows: dict[str, float] = {}
        for z in cfg.zones:
            target = cfg.ambient_temp + cfg.heat_per_kw * zone_it_kw.get(z, 0.0)
            if s.mechanical_cooling:
                target -= cfg.mech_cooling_drop
            elif s.economizer_mode:
                target -= cfg.econ_cooling_drop
            t = s.zone_temp[z] + (target - s.zone_temp[z]) * decay
            t += self.temp_ramps.get(z, 0.0) * dt
            temps[z] = max(-20.0, min(80.0, t))

            h_target = 95.0 if z in self.water_zones else cfg.ambient_humidity
            h_rate = h_decay * (4.0 if z in self.water_zones else 1.0)
            h = s.zone_humidity[z] + (h_target - s.zone_humidity[z]) * min(1.0, h_rate)
            hums[z] = max(0.0, min(100.0, h))

            flow_target = 12000.0 if s.mechanical_cooling else 8000.0 if s.economizer_mode else 3000.0
            flows[z] = s.zone_airflow[z] + (flow_target - s.zone_airflow[z]) * decay
            press[z] = cfg.base_pressure + flows[z] / 1000.0

        # controller acts on the temperatures just computed
        mech = s.mechanical_cooling
        if any(t > cfg.setpoint for t in temps.values()):
            mech = True
        elif all(t < cfg.setpoint - cfg.hysteresis for t in temps.values()):
            mech = False
        econ = (cfg.ambient_temp <= cfg.economizer_limit) and not mech

        it_total = sum(feed_it_kw.values())
        overhead = cfg.overhead_mech if mech else cfg.overhead_econ if econ else cfg.overhead_idle
        facility = it_total * (1.0 + overhead)

        self.state = PodState(
            zone_temp=temps,
            zone_humidity=hums,
            zone_pressure=press,
            zone_airflow=flows,
            feed_it_kw=dict(feed_it_kw),
            feed_spike_kw=dict(self.power_spikes),
            facility_kw=facility,
            mechanical_cooling=mech,
            economizer_mode=econ,
            water_alarm=bool(self.water_zones),
            fire_alarm=self.fire,
            sim_clock=s.sim_clock + dt,
        )
        return self.state

    def fork_state(self) -> PodState:
        """Copy of the current state (PodState is frozen; dicts are not shared)."""
        s = self.state
        return replace(
            s,
            zone_temp=dict(s.zone_temp),
            zone_humidity=dict(s.zone_humidity),
            zone_pressure=dict(s.zone_pressure),
            zone_airflow=dict(s.zone_airflow),
            feed_it_kw=dict(s.feed_it_kw),
            feed_spike_kw=dict(s.feed_spike_kw),
        )
