from typing import Optional

from pydantic import BaseModel, ConfigDict, Field


class RunSpec(BaseModel):
    """
    One CLI invocation.

    Attributes:
        command: fit | predict | schedule | simulate | compare | generate
        trace: Power trace or sub-hour CSV
        irradiation: Optional irradiation trace paired with `trace`
        config: System configuration file (defaults apply when omitted)
        weights: Fitted predictor parameter file
        algo: Algorithm for schedule / simulate
        from_: First frame: ISO date/time, epoch seconds or sub-hour index
        days: Number of frames to run
        seed: Seed for synthetic data and random restarts
        out: Output directory
        fill_gaps: Resampling gap policy
        horizon: PTF-On re-planning horizon
        restarts: BCD starts per frame (default start plus random ones)
        max_sweeps: BCD sweep cap per start
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    command: str = Field(..., description="Command to run")
    trace: Optional[str] = Field(None, description="Power trace or sub-hour CSV path")
    irradiation: Optional[str] = Field(None, description="Irradiation trace path")
    config: Optional[str] = Field(None, description="key=value system configuration path")
    weights: Optional[str] = Field(None, description="Predictor parameter file")
    algo: Optional[str] = Field(None, description="ptf | ptfon | sgtdma | bcd")
    from_: Optional[str] = Field(None, alias="from", description="Start of the date window")
    days: int = Field(1, ge=1, description="Frames to run")
    seed: int = Field(0, ge=0, description="Random seed")
    out: str = Field("out", description="Output directory")
    fill_gaps: str = Field("error", description="error | zero")
    horizon: str = Field("sliding", description="sliding | frame")
    restarts: int = Field(10, ge=1, description="BCD starts per frame")
    max_sweeps: int = Field(500, ge=1, description="BCD sweep cap per start")
