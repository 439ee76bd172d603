from .writers import (
    att_frame,
    att_table_from_json,
    emit,
    plot_frame,
    render_att,
    render_att_csv,
    render_att_json,
    render_att_text,
    render_mc_json,
    write_plot_data,
)

__all__ = [
    "att_frame",
    "att_table_from_json",
    "emit",
    "plot_frame",
    "render_att",
    "render_att_csv",
    "render_att_json",
    "render_att_text",
    "render_mc_json",
    "write_plot_data",
]
